"""Head-noun phrase extraction from dependency parses.

Two uses share one rule: the visual-concept phrase of an image caption and
the category phrase of an encyclopedia-style definition sentence. The phrase
is the head noun plus its directly attached ``amod``/``compound`` modifiers,
emitted in surface order. When the parse root is not a noun (verb-rooted
captions), the head noun is the nearest noun dependent found breadth-first
from the root, ties broken by lower token index. Copular definitions need no
special casing: their predicate nominal is the parse root.

Determiners, numbers, and post-nominal prepositional material never enter the
phrase because only ``amod``/``compound`` dependents are collected.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NoNounFound
from .formats import ParseToken, VisualConcept, validate_parse

MODIFIER_RELATIONS = frozenset({"amod", "compound"})


@dataclass(frozen=True)
class ExtractedPhrase:
    """A composed phrase plus provenance into the source parse."""

    text: str
    head_index: int
    modifier_indices: tuple[int, ...]

    @property
    def matching_text(self) -> str:
        """Lowercased form used wherever phrases are compared or embedded."""
        return self.text.lower()


def _children(parse: Sequence[ParseToken], head_index: int) -> list[ParseToken]:
    return [t for t in parse if t.head == head_index]


def _find_head_noun(parse: Sequence[ParseToken]) -> ParseToken:
    root = next(t for t in parse if t.head == 0)
    if root.is_noun:
        return root
    # Breadth-first descent to the nearest noun dependent; within a level,
    # lower token index wins.
    frontier = [root]
    while frontier:
        children: list[ParseToken] = []
        for node in frontier:
            children.extend(_children(parse, node.index))
        children.sort(key=lambda t: t.index)
        for child in children:
            if child.is_noun:
                return child
        frontier = children
    raise NoNounFound(
        f"no noun token reachable from root {root.surface!r} ({root.upos})"
    )


def _compose(parse: Sequence[ParseToken], head: ParseToken) -> ExtractedPhrase:
    modifiers = [
        t for t in _children(parse, head.index) if t.deprel in MODIFIER_RELATIONS
    ]
    picked = sorted(modifiers + [head], key=lambda t: t.index)
    return ExtractedPhrase(
        text=" ".join(t.surface for t in picked),
        head_index=head.index,
        modifier_indices=tuple(t.index for t in picked if t.index != head.index),
    )


def extract_concept_name(parse: Sequence[ParseToken]) -> ExtractedPhrase:
    """Visual-concept phrase of a caption parse.

    Raises NoNounFound when the parse contains no noun reachable from the
    root.
    """
    validate_parse(parse)
    return _compose(parse, _find_head_noun(parse))


def extract_category(first_sentence_parse: Sequence[ParseToken]) -> ExtractedPhrase:
    """Category phrase of a definition's first sentence.

    For copular definitions the parse root already is the predicate nominal,
    which is exactly the category head noun.
    """
    validate_parse(first_sentence_parse)
    return _compose(first_sentence_parse, _find_head_noun(first_sentence_parse))


def truncate_knowledge(text: str, token_budget: int) -> str:
    """Clip knowledge text to a whitespace-token budget."""
    words = text.split()
    if len(words) <= token_budget:
        return text.strip()
    return " ".join(words[:token_budget])


def build_knowledge_base(
    pages: Iterable[tuple[str, Sequence[ParseToken], str]],
    *,
    knowledge_token_budget: int = 40,
) -> list[VisualConcept]:
    """Mine one VisualConcept per page from (name, first-sentence parse,
    full text) triples. Pages whose first sentence yields no category are
    skipped with a warning.
    """
    concepts: list[VisualConcept] = []
    for name, parse, full_text in pages:
        try:
            category = extract_category(parse)
        except NoNounFound as exc:
            warnings.warn(f"skipping page {name!r}: {exc}", stacklevel=2)
            continue
        concepts.append(
            VisualConcept(
                name=name,
                category=category.text,
                knowledge=truncate_knowledge(full_text, knowledge_token_budget),
            )
        )
    return concepts
