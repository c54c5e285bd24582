"""Phrase embeddings and cosine similarity over category names.

Phrases are pooled as the arithmetic mean of their in-vocabulary word
vectors. Pooling tokenization lowercases and splits on whitespace and
hyphens, matching the vocabularies of common word-vector dumps. A phrase
with no in-vocabulary word gets the zero vector, and any cosine against a
zero-norm vector is defined as 0 so fully out-of-vocabulary categories stay
maximally dissimilar without poisoning argmax or threshold logic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyPhrase
from .formats import EmbeddingTable, VisualConcept

_TOKEN_SPLIT = re.compile(r"[\s\-]+")


@dataclass(frozen=True)
class PhraseVector:
    vector: np.ndarray
    coverage: float  # fraction of phrase words found in the table


def pooling_tokens(phrase: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(phrase.lower()) if t]


def phrase_embedding(phrase: str, table: EmbeddingTable) -> PhraseVector:
    """Mean-pooled embedding of a phrase's in-vocabulary words."""
    words = pooling_tokens(phrase)
    if not words:
        raise EmptyPhrase(f"phrase {phrase!r} has no tokens")
    hits = [table.entries[w] for w in words if w in table.entries]
    if not hits:
        return PhraseVector(np.zeros(table.dimension), 0.0)
    return PhraseVector(np.mean(hits, axis=0), len(hits) / len(words))


def cosine_similarity(a: PhraseVector, b: PhraseVector) -> float:
    if a.vector.shape != b.vector.shape:
        raise DimensionMismatch(
            f"cannot compare vectors of shape {a.vector.shape} and {b.vector.shape}"
        )
    na = float(np.linalg.norm(a.vector))
    nb = float(np.linalg.norm(b.vector))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a.vector, b.vector) / (na * nb))


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else np.zeros_like(vec)


def unit_phrase_vector(phrase: str, table: EmbeddingTable) -> np.ndarray:
    """Unit-normalized pooled phrase vector, memoized on the table.

    Zero-norm phrases stay the zero vector, so a dot product of unit vectors
    reproduces cosine_similarity including its zero-norm convention.
    """
    cache = table._unit_cache
    key = phrase.lower()
    hit = cache.get(key)
    if hit is None:
        hit = _unit(phrase_embedding(phrase, table).vector)
        cache[key] = hit
    return hit


def category_similarity(a: str, b: str, table: EmbeddingTable) -> float:
    """Cosine similarity between two category phrases."""
    return float(np.dot(unit_phrase_vector(a, table), unit_phrase_vector(b, table)))


def category_similarities(target: str, phrases: list[str],
                          table: EmbeddingTable) -> np.ndarray:
    """Vectorized cosine of one target category against many phrases."""
    if not phrases:
        return np.zeros(0)
    matrix = np.stack([unit_phrase_vector(p, table) for p in phrases])
    return matrix @ unit_phrase_vector(target, table)


def rank_by_category_similarity(
    target: VisualConcept,
    candidates: list[VisualConcept],
    table: EmbeddingTable,
) -> list[tuple[int, float]]:
    """Candidates ordered by category cosine to the target, best first.

    The sort is stable: equal scores keep candidate input order.
    """
    if not candidates:
        raise EmptyPhrase("candidate list is empty")
    scores = category_similarities(target.category, [c.category for c in candidates],
                                   table)
    order = sorted(range(len(candidates)), key=lambda i: -scores[i])
    return [(i, float(scores[i])) for i in order]
