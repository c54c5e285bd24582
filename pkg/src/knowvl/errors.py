"""Exception types raised across the pipeline.

Every error carries a short machine-readable ``kind`` (the class name) so the
CLI can emit structured error records on stderr.
"""

from __future__ import annotations


class KnowvlError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 2

    @property
    def kind(self) -> str:
        return type(self).__name__


class ValidationError(KnowvlError):
    """Bad input data or configuration; maps to CLI exit code 1."""

    exit_code = 1


# ---------------------------------------------------------------------------
# formats
# ---------------------------------------------------------------------------

class MalformedRow(ValidationError):
    """A token line does not have the expected column count."""


class DanglingHead(ValidationError):
    """A head index references a token that does not exist in the sentence."""


class MultipleRoots(ValidationError):
    """A sentence has zero or more than one root token (head == 0)."""


class CyclicHeads(ValidationError):
    """Head links form a cycle, so some token cannot reach the root."""


class DimensionMismatch(ValidationError):
    """Vectors of inconsistent length where a uniform dimension is required."""


class NegativeBox(ValidationError):
    """A bounding box with non-positive width/height or negative origin."""


class RaggedVector(ValidationError):
    """An embedding line whose float count disagrees with the table dimension."""


class MissingField(ValidationError):
    """A structured record is missing a required field."""


class EmptyTable(ValidationError):
    """An embedding table with no entries."""


# ---------------------------------------------------------------------------
# concept extraction
# ---------------------------------------------------------------------------

class NoNounFound(ValidationError):
    """No noun token is reachable from the parse root."""


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

class EmptyPhrase(ValidationError):
    """A phrase with no tokens after whitespace/hyphen splitting."""


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

class EmptyPool(ValidationError):
    """No candidate concepts remain after exclusions."""


class NoDissimilarConcept(KnowvlError):
    """Every pool member is at or above the similarity threshold."""


class NoObjects(ValidationError):
    """A record without detected objects where at least one is required."""


class NoValidDonor(KnowvlError):
    """The category filter removed every replacement donor."""


class IndexOutOfRange(ValidationError):
    """An object index that does not exist in its record."""


# ---------------------------------------------------------------------------
# model / training
# ---------------------------------------------------------------------------

class ShapeMismatch(ValidationError):
    """Batch tensors whose shapes disagree with the model configuration."""


class NonFiniteLoss(KnowvlError):
    """Training produced a NaN or infinite loss."""


class CorpusManifestMismatch(ValidationError):
    """Corpus contents disagree with the manifest header record."""
