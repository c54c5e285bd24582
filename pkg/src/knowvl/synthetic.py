"""Deterministic synthetic data for desk-scale experiments and tests.

The embedding space is built from disjoint two-dimensional blocks, one per
theme: vectors of different themes are exactly orthogonal (cosine 0, safely
below the relevance threshold) while same-theme vectors stay close. That
gives the samplers a controlled similarity structure without any external
word-vector dump.
"""

from __future__ import annotations

import numpy as np

from .formats import DetectedObject, EmbeddingTable, ImageRecord, VisualConcept
from .zeroshot import ZeroShotTask

THEMES: dict[str, tuple[list[str], list[str]]] = {
    # theme: (nouns, adjectives) — vocabularies are disjoint across themes
    "art": (["carving", "ornament", "mosaic", "figurine"],
            ["decorative", "painted", "folk", "gilded"]),
    "festival": (["festival", "parade", "ceremony", "pageant"],
                 ["seasonal", "harvest", "lunar", "annual"]),
    "food": (["stew", "flatbread", "dumpling", "porridge"],
             ["spiced", "fermented", "steamed", "savory"]),
    "clothing": (["garment", "robe", "headdress", "sash"],
                 ["woven", "embroidered", "ceremonial", "quilted"]),
    "building": (["gate", "shrine", "pavilion", "granary"],
                 ["wooden", "sacred", "thatched", "lacquered"]),
    "instrument": (["drum", "flute", "zither", "chime"],
                   ["bamboo", "bronze", "stringed", "hollow"]),
    "vehicle": (["cart", "ferry", "sledge", "rickshaw"],
                ["wheeled", "sailing", "harnessed", "varnished"]),
    "vessel": (["kettle", "basin", "urn", "ladle"],
               ["clay", "copper", "glazed", "hammered"]),
}

THEME_NAMES = list(THEMES)
_SYLLABLES = ["ka", "mi", "to", "ra", "shu", "ven", "dal", "or", "iz", "ban"]


def make_embedding_table(seed: int = 0, *, block_jitter: float = 0.25) -> EmbeddingTable:
    """One 2-D block per theme: base axis plus a small per-word jitter on the
    block's second axis."""
    rng = np.random.default_rng(seed)
    dimension = 2 * len(THEMES)
    entries: dict[str, np.ndarray] = {}
    for t, theme in enumerate(THEME_NAMES):
        nouns, adjs = THEMES[theme]
        for word in nouns + adjs + [theme]:
            vec = np.zeros(dimension)
            vec[2 * t] = 1.0
            vec[2 * t + 1] = rng.uniform(0.0, block_jitter)
            entries[word] = vec
    return EmbeddingTable(dimension=dimension, entries=entries)


def _fake_word(rng: np.random.Generator) -> str:
    return "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=3))


def make_knowledge_base(n_concepts: int = 200, seed: int = 0) -> list[VisualConcept]:
    """Concepts cycling through the themes; categories pair a theme adjective
    with a theme noun so category similarity mirrors theme membership."""
    rng = np.random.default_rng(seed)
    concepts: list[VisualConcept] = []
    seen_names: set[str] = set()
    for i in range(n_concepts):
        theme = THEME_NAMES[i % len(THEME_NAMES)]
        nouns, adjs = THEMES[theme]
        name = f"{_fake_word(rng)} {nouns[int(rng.integers(len(nouns)))]}"
        while name in seen_names:
            name = f"{_fake_word(rng)} {nouns[int(rng.integers(len(nouns)))]}"
        seen_names.add(name)
        category = f"{adjs[int(rng.integers(len(adjs)))]} {nouns[int(rng.integers(len(nouns)))]}"
        knowledge = (f"A {name} is a {category} traditionally made by local "
                     f"artisans and shared at gatherings.")
        concepts.append(VisualConcept(name=name, category=category, knowledge=knowledge))
    return concepts


def concept_theme(index: int) -> str:
    return THEME_NAMES[index % len(THEME_NAMES)]


_PLACES = ["market", "courtyard", "riverbank", "square", "workshop", "harbor"]


def make_records(
    n_records: int,
    knowledge_base: list[VisualConcept],
    seed: int = 0,
    *,
    feature_dim: int = 8,
    min_objects: int = 4,
    max_objects: int = 6,
    width: int = 640,
    height: int = 480,
) -> list[ImageRecord]:
    """Image records whose first object carries a tag from the concept's own
    theme (so locating finds it) and whose remaining objects mix themes."""
    rng = np.random.default_rng(seed)
    all_nouns = [n for nouns, _ in THEMES.values() for n in nouns]
    records: list[ImageRecord] = []
    for i in range(n_records):
        concept = knowledge_base[i % len(knowledge_base)]
        theme = concept_theme(i % len(knowledge_base))
        theme_nouns = THEMES[theme][0]
        n_objects = int(rng.integers(min_objects, max_objects + 1))
        objects: list[DetectedObject] = []
        for j in range(n_objects):
            if j == 0:
                tag = theme_nouns[int(rng.integers(len(theme_nouns)))]
                w, h = int(rng.integers(200, 400)), int(rng.integers(200, 320))
            else:
                tag = all_nouns[int(rng.integers(len(all_nouns)))]
                w, h = int(rng.integers(20, 200)), int(rng.integers(20, 180))
            x = int(rng.integers(0, width - w))
            y = int(rng.integers(0, height - h))
            objects.append(DetectedObject(
                tag=tag, bbox=(x, y, w, h),
                feature=rng.normal(size=feature_dim),
                score=float(np.round(rng.uniform(0.5, 1.0), 4)),
            ))
        place = _PLACES[int(rng.integers(len(_PLACES)))]
        records.append(ImageRecord(
            image_id=f"img{i:05d}",
            caption=f"a {concept.name} at the {place}",
            width=width, height=height, objects=objects,
            concept_name=concept.name,
            knowledge=concept.knowledge,
        ))
    return records


# ---------------------------------------------------------------------------
# Class-separable overfit / zero-shot setup
# ---------------------------------------------------------------------------

def make_class_setup(
    seed: int = 0,
    *,
    n_classes: int = 4,
    items_per_class: int = 8,
    feature_dim: int = 8,
    feature_noise: float = 0.1,
) -> tuple[list[ImageRecord], list[VisualConcept], EmbeddingTable, ZeroShotTask]:
    """A tiny memorizable world: every class has a feature prototype (items
    scatter around it by ``feature_noise``), a class-revealing tag, and its
    own knowledge sentence.

    Returns (records, knowledge base, embedding table, zero-shot task); the
    task items are the same images the records describe, so a model that
    memorizes the corpus should classify them perfectly.
    """
    if n_classes > len(THEME_NAMES) or n_classes > feature_dim:
        raise ValueError("n_classes must fit both the theme list and feature_dim")
    rng = np.random.default_rng(seed)
    table = make_embedding_table(seed)
    classes: list[tuple[str, str]] = []
    kb: list[VisualConcept] = []
    records: list[ImageRecord] = []
    items: list[ImageRecord] = []
    gold: list[int] = []

    # Caption fillers vary in length so the model trains across segment
    # shifts, including the bare class name the zero-shot protocol composes.
    fillers = ["", "today", "this morning", "seen from afar"]
    for c in range(n_classes):
        theme = THEME_NAMES[c]
        nouns, adjs = THEMES[theme]
        name = f"{adjs[0]} {nouns[0]}"
        category = f"{adjs[1]} {nouns[0]}"
        # Knowledge is class-specific but deliberately avoids the class name
        # tokens: caption-knowledge string overlap would otherwise act as a
        # matching shortcut that the zero-shot composition cannot expose.
        knowledge = (f"this {theme} treasure is kept in the {adjs[2]} hall "
                     f"and honored each season")
        classes.append((name, knowledge))
        kb.append(VisualConcept(name=name, category=category, knowledge=knowledge))

        prototype = np.zeros(feature_dim)
        prototype[c] = 3.0
        side_feature = np.zeros(feature_dim)
        side_feature[(c + n_classes) % feature_dim] = 2.0
        side_theme = THEME_NAMES[(c + n_classes) % len(THEME_NAMES)]
        for item in range(items_per_class):
            # The detector tag of the main object is the class name itself, so
            # the tag text the model sees is identical at train time (where
            # locating overrides tags with the concept name) and at zero-shot
            # evaluation time (raw detector tags).
            objects = [
                DetectedObject(tag=name, bbox=(20, 20, 320, 240),
                               feature=prototype + feature_noise * rng.normal(size=feature_dim)),
                DetectedObject(tag=THEMES[side_theme][0][0], bbox=(400, 300, 100, 80),
                               feature=side_feature + feature_noise * rng.normal(size=feature_dim)),
            ]
            filler = fillers[item % len(fillers)]
            rec = ImageRecord(
                image_id=f"cls{c}_item{item}",
                caption=f"{name} {filler}".strip(),
                width=640, height=480,
                objects=objects,
                concept_name=name,
                knowledge=knowledge,
            )
            records.append(rec)
            items.append(rec.copy())
            gold.append(c)

    task = ZeroShotTask(classes=classes, items=items, gold=gold)
    return records, kb, table, task
