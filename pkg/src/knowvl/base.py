"""Minimal estimator base and input-validation helpers.

The estimator wrappers in :mod:`knowvl.estimators` follow the scikit-learn
parameter protocol (constructor args are hyper-parameters, ``get_params`` /
``set_params`` expose them, fitted state uses trailing underscores) without
depending on scikit-learn itself.
"""

from __future__ import annotations

import inspect

import numpy as np

from .errors import ValidationError


class BaseEstimator:
    """get_params/set_params via introspection of the subclass ``__init__``."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict:
        del deep  # no nested estimators
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "BaseEstimator":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValidationError(
                    f"unknown parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in sorted(self.get_params().items()))
        return f"{type(self).__name__}({args})"


class TransformerMixin:
    def fit(self, X, y=None):
        del X, y
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


def clone(estimator):
    """Fresh, unfitted copy built from the estimator's parameters."""
    return type(estimator)(**estimator.get_params())


def check_is_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise ValidationError(
            f"{type(estimator).__name__} is not fitted; call fit() before using "
            f"{attribute!r}"
        )


def check_seed(seed) -> int:
    """Validate an explicit 64-bit RNG seed. None is rejected: every sampling
    entry point must be reproducible."""
    if seed is None:
        raise ValidationError("an explicit integer seed is required")
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValidationError(f"seed must be an integer, got {type(seed).__name__}")
    return int(seed)


def check_positive(name: str, value) -> None:
    if value is None or value <= 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")


def check_fraction(name: str, value, *, inclusive: bool = False) -> None:
    ok = 0.0 <= value <= 1.0 if inclusive else 0.0 < value < 1.0
    if not ok:
        bounds = "[0, 1]" if inclusive else "(0, 1)"
        raise ValidationError(f"{name} must lie in {bounds}, got {value!r}")
