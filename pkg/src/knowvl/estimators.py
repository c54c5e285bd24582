"""Estimator-style wrappers over the functional pipeline.

These follow the scikit-learn conventions (constructor args are plain
hyper-parameters, ``fit`` returns ``self``, fitted state ends in an
underscore, ``get_params``/``set_params`` round-trip) so the pieces compose
with generic tooling: grid drivers, pipelines, cloning.
"""

from __future__ import annotations

import numpy as np

from .assembly import AssemblyConfig, Vocabulary, build_corpus
from .base import BaseEstimator, TransformerMixin, check_is_fitted, check_seed
from .concepts import extract_category, extract_concept_name
from .errors import NoNounFound
from .formats import EmbeddingTable, ImageRecord, VisualConcept
from .model import ModelConfig, ModelParams, load_checkpoint
from .sampling import SamplerConfig
from .training import TrainRunConfig, train
from .zeroshot import ZeroShotResult, ZeroShotTask, zero_shot_classify


class ConceptExtractor(BaseEstimator, TransformerMixin):
    """Transform dependency parses into head-noun phrases.

    ``kind='concept'`` applies the caption rule, ``kind='category'`` the
    definition-sentence rule (the composition is shared; the two names keep
    call sites honest about their inputs). Unextractable parses yield None
    when ``skip_errors`` is set, otherwise raise.
    """

    def __init__(self, kind: str = "concept", skip_errors: bool = False):
        self.kind = kind
        self.skip_errors = skip_errors

    def transform(self, X):
        extract = {"concept": extract_concept_name, "category": extract_category}[self.kind]
        out = []
        for parse in X:
            try:
                out.append(extract(parse))
            except NoNounFound:
                if not self.skip_errors:
                    raise
                out.append(None)
        return out


class CorpusAssembler(BaseEstimator, TransformerMixin):
    """Transform image records into a labeled training corpus."""

    def __init__(self, knowledge_base: list[VisualConcept] | None = None,
                 table: EmbeddingTable | None = None, seed: int | None = None,
                 mlm_rate: float = 0.15, max_text_tokens: int = 70,
                 max_objects: int = 50, tau: float = 0.3, shards: int = 1):
        self.knowledge_base = knowledge_base
        self.table = table
        self.seed = seed
        self.mlm_rate = mlm_rate
        self.max_text_tokens = max_text_tokens
        self.max_objects = max_objects
        self.tau = tau
        self.shards = shards

    def transform(self, X: list[ImageRecord]):
        seed = check_seed(self.seed)
        assembly_cfg = AssemblyConfig(
            mlm_rate=self.mlm_rate, max_text_tokens=self.max_text_tokens,
            max_objects=self.max_objects, rng_seed=seed,
        )
        sampler_cfg = SamplerConfig(tau=self.tau, rng_seed=seed)
        result = build_corpus(
            X, self.knowledge_base, assembly_cfg, sampler_cfg, self.table, seed,
            shards=self.shards,
        )
        self.manifest_ = result.manifest
        self.failures_ = result.failures
        return result.examples


class Pretrainer(BaseEstimator):
    """Fit the micro-transformer on an assembled corpus file."""

    def __init__(self, hidden: int = 64, layers: int = 2, heads: int = 4,
                 ffn: int = 256, dropout: float = 0.0, batch_size: int = 8,
                 max_steps: int = 2000, learning_rate: float = 1e-4,
                 seed: int | None = None, output_dir: str = "run"):
        self.hidden = hidden
        self.layers = layers
        self.heads = heads
        self.ffn = ffn
        self.dropout = dropout
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.learning_rate = learning_rate
        self.seed = seed
        self.output_dir = output_dir

    def fit(self, X, y=None):
        """X is a corpus path (str/Path)."""
        del y
        seed = check_seed(self.seed)
        run_cfg = TrainRunConfig(
            corpus_path=X, batch_size=self.batch_size, max_steps=self.max_steps,
            learning_rate=self.learning_rate, seed=seed, output_dir=self.output_dir,
        )
        from .formats import read_corpus
        from .training import model_config_for_corpus

        manifest, examples = read_corpus(X)
        model_cfg = model_config_for_corpus(
            manifest, hidden=self.hidden, layers=self.layers, heads=self.heads,
            ffn=self.ffn, dropout=self.dropout,
        )
        result = train(run_cfg, model_cfg, corpus=(manifest, examples))
        self.params_ = result.params
        self.checkpoint_path_ = result.checkpoint_path
        self.metrics_path_ = result.metrics_path
        self.final_loss_ = result.final_loss
        self.vocab_ = Vocabulary(list(manifest.vocab_tokens))
        return self


class ZeroShotClassifier(BaseEstimator):
    """Predict class indices by matching-head probability, argmax over the
    configured classes."""

    def __init__(self, checkpoint: str | None = None,
                 params: ModelParams | None = None,
                 vocab: Vocabulary | None = None,
                 classes: list[tuple[str, str]] | None = None,
                 max_text_tokens: int = 70, max_objects: int = 50):
        self.checkpoint = checkpoint
        self.params = params
        self.vocab = vocab
        self.classes = classes
        self.max_text_tokens = max_text_tokens
        self.max_objects = max_objects

    def fit(self, X=None, y=None):
        del X, y
        if self.params is not None:
            self.params_ = self.params
            self.vocab_ = self.vocab
        else:
            params, extras = load_checkpoint(self.checkpoint)
            self.params_ = params
            self.vocab_ = Vocabulary(list(extras["vocab_tokens"]))
        if self.vocab_ is None:
            raise ValueError("a vocabulary is required (vocab= or checkpoint extras)")
        if not self.classes or len(self.classes) < 2:
            raise ValueError("at least 2 (name, knowledge) classes are required")
        return self

    def _task(self, items: list[ImageRecord], gold: list[int] | None) -> ZeroShotTask:
        return ZeroShotTask(classes=list(self.classes), items=list(items),
                            gold=gold if gold is not None else [0] * len(items))

    def _classify(self, items: list[ImageRecord], gold: list[int] | None) -> ZeroShotResult:
        check_is_fitted(self, "params_")
        cfg = AssemblyConfig(max_text_tokens=self.max_text_tokens,
                             max_objects=self.max_objects)
        return zero_shot_classify(self.params_, self._task(items, gold), self.vocab_, cfg)

    def predict(self, X: list[ImageRecord]) -> np.ndarray:
        return np.asarray(self._classify(X, None).predictions)

    def predict_proba(self, X: list[ImageRecord]) -> np.ndarray:
        scores = self._classify(X, None).scores
        return scores / scores.sum(axis=1, keepdims=True)

    def score(self, X: list[ImageRecord], y) -> float:
        return self._classify(X, list(y)).accuracy
