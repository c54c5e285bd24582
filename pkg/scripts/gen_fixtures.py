#!/usr/bin/env python3
"""Regenerate the committed test fixtures.

Parse fixtures are hand-authored UD-style trees with hand-derived gold
phrases; the synthetic detections / knowledge base / embedding fixtures come
from knowvl.synthetic with pinned seeds. Output goes to tests/fixtures/.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from knowvl.formats import (
    ParseToken,
    write_detections,
    write_embedding_table,
    write_knowledge_base,
    write_parse_file,
    write_records,
)
from knowvl.synthetic import make_embedding_table, make_knowledge_base, make_records

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# (index, surface, upos, head, deprel) per token; gold = hand application of
# the head-noun rule (root noun, else breadth-first nearest noun dependent;
# phrase = direct amod/compound modifiers + head in surface order).
CAPTION_SENTENCES: list[tuple[str, str, list[tuple]]] = [
    ("cap001", "Chinese paper cuttings", [
        (1, "Chinese", "ADJ", 3, "amod"),
        (2, "paper", "NOUN", 3, "compound"),
        (3, "cuttings", "NOUN", 0, "root"),
        (4, "in", "ADP", 6, "case"),
        (5, "a", "DET", 6, "det"),
        (6, "shop", "NOUN", 3, "nmod"),
        (7, ".", "PUNCT", 3, "punct"),
    ]),
    ("cap002", "cuttings", [
        (1, "cuttings", "NOUN", 0, "root"),
    ]),
    ("cap003", "festival", [
        (1, "the", "DET", 2, "det"),
        (2, "festival", "NOUN", 3, "nsubj"),
        (3, "began", "VERB", 0, "root"),
        (4, "at", "ADP", 5, "case"),
        (5, "noon", "NOUN", 3, "obl"),
    ]),
    ("cap004", "wooden torii gate", [
        (1, "A", "DET", 4, "det"),
        (2, "wooden", "ADJ", 4, "amod"),
        (3, "torii", "NOUN", 4, "compound"),
        (4, "gate", "NOUN", 0, "root"),
        (5, "near", "ADP", 7, "case"),
        (6, "the", "DET", 7, "det"),
        (7, "sea", "NOUN", 4, "nmod"),
        (8, ".", "PUNCT", 4, "punct"),
    ]),
    ("cap005", "children", [
        (1, "Two", "NUM", 2, "nummod"),
        (2, "children", "NOUN", 3, "nsubj"),
        (3, "flying", "VERB", 0, "root"),
        (4, "colorful", "ADJ", 5, "amod"),
        (5, "kites", "NOUN", 3, "obj"),
        (6, "in", "ADP", 8, "case"),
        (7, "the", "DET", 8, "det"),
        (8, "park", "NOUN", 3, "obl"),
        (9, ".", "PUNCT", 3, "punct"),
    ]),
    ("cap006", "spicy lamb stew", [
        (1, "a", "DET", 4, "det"),
        (2, "spicy", "ADJ", 4, "amod"),
        (3, "lamb", "NOUN", 4, "compound"),
        (4, "stew", "NOUN", 0, "root"),
        (5, "with", "ADP", 6, "case"),
        (6, "flatbread", "NOUN", 4, "nmod"),
    ]),
    ("cap007", "women", [
        (1, "women", "NOUN", 2, "nsubj"),
        (2, "weaving", "VERB", 0, "root"),
        (3, "silk", "NOUN", 4, "compound"),
        (4, "fabric", "NOUN", 2, "obj"),
    ]),
    ("cap008", "ornate copper kettle", [
        (1, "an", "DET", 4, "det"),
        (2, "ornate", "ADJ", 4, "amod"),
        (3, "copper", "NOUN", 4, "compound"),
        (4, "kettle", "NOUN", 0, "root"),
        (5, "on", "ADP", 7, "case"),
        (6, "a", "DET", 7, "det"),
        (7, "stove", "NOUN", 4, "nmod"),
        (8, ".", "PUNCT", 4, "punct"),
    ]),
    ("cap009", "street vendors", [
        (1, "street", "NOUN", 2, "compound"),
        (2, "vendors", "NOUN", 0, "root"),
        (3, "selling", "VERB", 2, "acl"),
        (4, "grilled", "ADJ", 5, "amod"),
        (5, "corn", "NOUN", 3, "obj"),
    ]),
    ("cap010", "old stone bridge", [
        (1, "the", "DET", 4, "det"),
        (2, "old", "ADJ", 4, "amod"),
        (3, "stone", "NOUN", 4, "compound"),
        (4, "bridge", "NOUN", 0, "root"),
        (5, "over", "ADP", 7, "case"),
        (6, "the", "DET", 7, "det"),
        (7, "river", "NOUN", 4, "nmod"),
        (8, ".", "PUNCT", 4, "punct"),
    ]),
    ("cap011", "dancers", [
        (1, "dancers", "NOUN", 2, "nsubj"),
        (2, "performed", "VERB", 0, "root"),
        (3, "during", "ADP", 6, "case"),
        (4, "the", "DET", 6, "det"),
        (5, "harvest", "NOUN", 6, "compound"),
        (6, "festival", "NOUN", 2, "obl"),
    ]),
    ("cap012", "bronze temple bell", [
        (1, "a", "DET", 4, "det"),
        (2, "bronze", "NOUN", 4, "compound"),
        (3, "temple", "NOUN", 4, "compound"),
        (4, "bell", "NOUN", 0, "root"),
        (5, "hanging", "VERB", 4, "acl"),
        (6, "from", "ADP", 8, "case"),
        (7, "a", "DET", 8, "det"),
        (8, "beam", "NOUN", 5, "obl"),
    ]),
    ("cap013", "fishermen", [
        (1, "fishermen", "NOUN", 2, "nsubj"),
        (2, "mending", "VERB", 0, "root"),
        (3, "nets", "NOUN", 2, "obj"),
        (4, "at", "ADP", 5, "case"),
        (5, "dawn", "NOUN", 2, "obl"),
        (6, ".", "PUNCT", 2, "punct"),
    ]),
    ("cap014", "embroidered wedding garments", [
        (1, "embroidered", "ADJ", 3, "amod"),
        (2, "wedding", "NOUN", 3, "compound"),
        (3, "garments", "NOUN", 0, "root"),
        (4, "on", "ADP", 5, "case"),
        (5, "display", "NOUN", 3, "nmod"),
    ]),
    ("cap015", "rice terraces", [
        (1, "it", "PRON", 2, "nsubj"),
        (2, "rained", "VERB", 0, "root"),
        (3, "heavily", "ADV", 2, "advmod"),
        (4, "over", "ADP", 7, "case"),
        (5, "the", "DET", 7, "det"),
        (6, "rice", "NOUN", 7, "compound"),
        (7, "terraces", "NOUN", 2, "obl"),
    ]),
    ("cap016", "painted clay urn", [
        (1, "a", "DET", 4, "det"),
        (2, "painted", "ADJ", 4, "amod"),
        (3, "clay", "NOUN", 4, "compound"),
        (4, "urn", "NOUN", 0, "root"),
    ]),
    ("cap017", "monks", [
        (1, "monks", "NOUN", 2, "nsubj"),
        (2, "walking", "VERB", 0, "root"),
        (3, "toward", "ADP", 6, "case"),
        (4, "the", "DET", 6, "det"),
        (5, "mountain", "NOUN", 6, "compound"),
        (6, "shrine", "NOUN", 2, "obl"),
    ]),
    ("cap018", "fresh dumplings", [
        (1, "fresh", "ADJ", 2, "amod"),
        (2, "dumplings", "NOUN", 0, "root"),
        (3, "steaming", "VERB", 2, "acl"),
        (4, "in", "ADP", 6, "case"),
        (5, "bamboo", "NOUN", 6, "compound"),
        (6, "baskets", "NOUN", 3, "obl"),
        (7, ".", "PUNCT", 2, "punct"),
    ]),
    ("cap019", "year parade", [
        (1, "the", "DET", 4, "det"),
        (2, "new", "ADJ", 3, "amod"),
        (3, "year", "NOUN", 4, "compound"),
        (4, "parade", "NOUN", 5, "nsubj"),
        (5, "crossed", "VERB", 0, "root"),
        (6, "the", "DET", 7, "det"),
        (7, "bridge", "NOUN", 5, "obj"),
    ]),
    ("cap020", "sugar cane", [
        (1, "sugar", "NOUN", 2, "compound"),
        (2, "cane", "NOUN", 0, "root"),
        (3, "stacked", "VERB", 2, "acl"),
        (4, "beside", "ADP", 6, "case"),
        (5, "a", "DET", 6, "det"),
        (6, "flute", "NOUN", 3, "obl"),
    ]),
    ("cap021", "lacquered trays", [
        (1, "three", "NUM", 3, "nummod"),
        (2, "lacquered", "ADJ", 3, "amod"),
        (3, "trays", "NOUN", 0, "root"),
        (4, "of", "ADP", 5, "case"),
        (5, "sweets", "NOUN", 3, "nmod"),
    ]),
    ("cap022", "ceremonial drum", [
        (1, "a", "DET", 3, "det"),
        (2, "ceremonial", "ADJ", 3, "amod"),
        (3, "drum", "NOUN", 0, "root"),
    ]),
    ("cap023", "grandmother", [
        (1, "grandmother", "NOUN", 2, "nsubj"),
        (2, "preparing", "VERB", 0, "root"),
        (3, "festival", "NOUN", 4, "compound"),
        (4, "sweets", "NOUN", 2, "obj"),
        (5, "in", "ADP", 7, "case"),
        (6, "the", "DET", 7, "det"),
        (7, "kitchen", "NOUN", 2, "obl"),
    ]),
    ("cap024", "woven reed mats", [
        (1, "woven", "ADJ", 3, "amod"),
        (2, "reed", "NOUN", 3, "compound"),
        (3, "mats", "NOUN", 0, "root"),
        (4, "covering", "VERB", 3, "acl"),
        (5, "the", "DET", 6, "det"),
        (6, "floor", "NOUN", 4, "obj"),
        (7, ".", "PUNCT", 3, "punct"),
    ]),
    ("cap025", "paper lanterns", [
        (1, "paper", "NOUN", 2, "compound"),
        (2, "lanterns", "NOUN", 0, "root"),
        (3, "glowing", "VERB", 2, "acl"),
        (4, "red", "ADJ", 3, "xcomp"),
        (5, "above", "ADP", 7, "case"),
        (6, "the", "DET", 7, "det"),
        (7, "alley", "NOUN", 3, "obl"),
    ]),
]

DEFINITION_SENTENCES: list[tuple[str, str, list[tuple]]] = [
    ("def001", "traditional Japanese gate", [
        (1, "A", "DET", 2, "det"),
        (2, "torii", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "traditional", "ADJ", 7, "amod"),
        (6, "Japanese", "ADJ", 7, "amod"),
        (7, "gate", "NOUN", 0, "root"),
        (8, "most", "ADV", 9, "advmod"),
        (9, "commonly", "ADV", 10, "advmod"),
        (10, "found", "VERB", 7, "acl"),
        (11, "at", "ADP", 13, "case"),
        (12, "the", "DET", 13, "det"),
        (13, "entrance", "NOUN", 10, "obl"),
        (14, "of", "ADP", 17, "case"),
        (15, "a", "DET", 17, "det"),
        (16, "Shinto", "ADJ", 17, "amod"),
        (17, "shrine", "NOUN", 13, "nmod"),
        (18, ".", "PUNCT", 7, "punct"),
    ]),
    ("def002", "traditional form", [
        (1, "Jewish", "ADJ", 3, "amod"),
        (2, "paper", "NOUN", 3, "compound"),
        (3, "cutting", "NOUN", 7, "nsubj"),
        (4, "is", "AUX", 7, "cop"),
        (5, "a", "DET", 7, "det"),
        (6, "traditional", "ADJ", 7, "amod"),
        (7, "form", "NOUN", 0, "root"),
        (8, "of", "ADP", 11, "case"),
        (9, "Jewish", "ADJ", 11, "amod"),
        (10, "folk", "NOUN", 11, "compound"),
        (11, "art", "NOUN", 7, "nmod"),
        (12, ".", "PUNCT", 7, "punct"),
    ]),
    ("def003", "gate", [
        (1, "X", "PROPN", 4, "nsubj"),
        (2, "is", "AUX", 4, "cop"),
        (3, "a", "DET", 4, "det"),
        (4, "gate", "NOUN", 0, "root"),
        (5, ".", "PUNCT", 4, "punct"),
    ]),
    ("def004", "metal water heater", [
        (1, "A", "DET", 2, "det"),
        (2, "samovar", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "metal", "NOUN", 7, "compound"),
        (6, "water", "NOUN", 7, "compound"),
        (7, "heater", "NOUN", 0, "root"),
        (8, "used", "VERB", 7, "acl"),
        (9, "to", "PART", 10, "mark"),
        (10, "boil", "VERB", 8, "xcomp"),
        (11, "water", "NOUN", 10, "obj"),
        (12, "for", "ADP", 13, "case"),
        (13, "tea", "NOUN", 10, "obl"),
        (14, ".", "PUNCT", 7, "punct"),
    ]),
    ("def005", "traditional Korean garment", [
        (1, "A", "DET", 2, "det"),
        (2, "hanbok", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "traditional", "ADJ", 7, "amod"),
        (6, "Korean", "ADJ", 7, "amod"),
        (7, "garment", "NOUN", 0, "root"),
        (8, "worn", "VERB", 7, "acl"),
        (9, "on", "ADP", 11, "case"),
        (10, "formal", "ADJ", 11, "amod"),
        (11, "occasions", "NOUN", 8, "obl"),
        (12, ".", "PUNCT", 7, "punct"),
    ]),
    ("def006", "earthenware cooking pot", [
        (1, "A", "DET", 2, "det"),
        (2, "tagine", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "an", "DET", 7, "det"),
        (5, "earthenware", "NOUN", 7, "compound"),
        (6, "cooking", "NOUN", 7, "compound"),
        (7, "pot", "NOUN", 0, "root"),
        (8, "with", "ADP", 11, "case"),
        (9, "a", "DET", 11, "det"),
        (10, "conical", "ADJ", 11, "amod"),
        (11, "lid", "NOUN", 7, "nmod"),
        (12, ".", "PUNCT", 7, "punct"),
    ]),
    ("def007", "traditional percussion ensemble", [
        (1, "A", "DET", 2, "det"),
        (2, "gamelan", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "traditional", "ADJ", 7, "amod"),
        (6, "percussion", "NOUN", 7, "compound"),
        (7, "ensemble", "NOUN", 0, "root"),
        (8, "of", "ADP", 9, "case"),
        (9, "Java", "PROPN", 7, "nmod"),
        (10, "and", "CCONJ", 11, "cc"),
        (11, "Bali", "PROPN", 9, "conj"),
        (12, ".", "PUNCT", 7, "punct"),
    ]),
    ("def008", "annual festival", [
        (1, "Diwali", "PROPN", 5, "nsubj"),
        (2, "is", "AUX", 5, "cop"),
        (3, "an", "DET", 5, "det"),
        (4, "annual", "ADJ", 5, "amod"),
        (5, "festival", "NOUN", 0, "root"),
        (6, "of", "ADP", 7, "case"),
        (7, "lights", "NOUN", 5, "nmod"),
        (8, ".", "PUNCT", 5, "punct"),
    ]),
    ("def009", "sailing vessel", [
        (1, "A", "DET", 2, "det"),
        (2, "dhow", "NOUN", 6, "nsubj"),
        (3, "is", "AUX", 6, "cop"),
        (4, "a", "DET", 6, "det"),
        (5, "sailing", "NOUN", 6, "compound"),
        (6, "vessel", "NOUN", 0, "root"),
        (7, "used", "VERB", 6, "acl"),
        (8, "in", "ADP", 11, "case"),
        (9, "the", "DET", 11, "det"),
        (10, "Indian", "ADJ", 11, "amod"),
        (11, "Ocean", "PROPN", 7, "obl"),
        (12, ".", "PUNCT", 6, "punct"),
    ]),
    ("def010", "wooden box drum", [
        (1, "A", "DET", 2, "det"),
        (2, "cajon", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "wooden", "ADJ", 7, "amod"),
        (6, "box", "NOUN", 7, "compound"),
        (7, "drum", "NOUN", 0, "root"),
        (8, "played", "VERB", 7, "acl"),
        (9, "with", "ADP", 11, "case"),
        (10, "the", "DET", 11, "det"),
        (11, "hands", "NOUN", 8, "obl"),
        (12, ".", "PUNCT", 7, "punct"),
    ]),
    ("def011", "ancient flute", [
        (1, "The", "DET", 2, "det"),
        (2, "quena", "NOUN", 6, "nsubj"),
        (3, "is", "AUX", 6, "cop"),
        (4, "an", "DET", 6, "det"),
        (5, "ancient", "ADJ", 6, "amod"),
        (6, "flute", "NOUN", 0, "root"),
        (7, "of", "ADP", 9, "case"),
        (8, "the", "DET", 9, "det"),
        (9, "Andes", "PROPN", 6, "nmod"),
        (10, ".", "PUNCT", 6, "punct"),
    ]),
    ("def012", "portable round tent", [
        (1, "A", "DET", 2, "det"),
        (2, "yurt", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "portable", "ADJ", 7, "amod"),
        (6, "round", "ADJ", 7, "amod"),
        (7, "tent", "NOUN", 0, "root"),
        (8, "covered", "VERB", 7, "acl"),
        (9, "with", "ADP", 10, "case"),
        (10, "felt", "NOUN", 8, "obl"),
        (11, ".", "PUNCT", 7, "punct"),
    ]),
    ("def013", "art", [
        (1, "Origami", "NOUN", 4, "nsubj"),
        (2, "is", "AUX", 4, "cop"),
        (3, "the", "DET", 4, "det"),
        (4, "art", "NOUN", 0, "root"),
        (5, "of", "ADP", 7, "case"),
        (6, "paper", "NOUN", 7, "compound"),
        (7, "folding", "NOUN", 4, "nmod"),
        (8, ".", "PUNCT", 4, "punct"),
    ]),
    ("def014", "fermented vegetable dish", [
        (1, "Kimchi", "NOUN", 6, "nsubj"),
        (2, "is", "AUX", 6, "cop"),
        (3, "a", "DET", 6, "det"),
        (4, "fermented", "ADJ", 6, "amod"),
        (5, "vegetable", "NOUN", 6, "compound"),
        (6, "dish", "NOUN", 0, "root"),
        (7, "of", "ADP", 8, "case"),
        (8, "Korea", "PROPN", 6, "nmod"),
        (9, ".", "PUNCT", 6, "punct"),
    ]),
    ("def015", "carved wooden statue", [
        (1, "A", "DET", 3, "det"),
        (2, "dala", "NOUN", 3, "compound"),
        (3, "horse", "NOUN", 8, "nsubj"),
        (4, "is", "AUX", 8, "cop"),
        (5, "a", "DET", 8, "det"),
        (6, "carved", "ADJ", 8, "amod"),
        (7, "wooden", "ADJ", 8, "amod"),
        (8, "statue", "NOUN", 0, "root"),
        (9, "of", "ADP", 11, "case"),
        (10, "a", "DET", 11, "det"),
        (11, "horse", "NOUN", 8, "nmod"),
        (12, ".", "PUNCT", 8, "punct"),
    ]),
    ("def016", "fitted dress", [
        (1, "A", "DET", 2, "det"),
        (2, "cheongsam", "NOUN", 6, "nsubj"),
        (3, "is", "AUX", 6, "cop"),
        (4, "a", "DET", 6, "det"),
        (5, "fitted", "ADJ", 6, "amod"),
        (6, "dress", "NOUN", 0, "root"),
        (7, "with", "ADP", 10, "case"),
        (8, "a", "DET", 10, "det"),
        (9, "high", "ADJ", 10, "amod"),
        (10, "collar", "NOUN", 6, "nmod"),
        (11, ".", "PUNCT", 6, "punct"),
    ]),
    ("def017", "set", [
        (1, "A", "DET", 2, "det"),
        (2, "matryoshka", "NOUN", 5, "nsubj"),
        (3, "is", "AUX", 5, "cop"),
        (4, "a", "DET", 5, "det"),
        (5, "set", "NOUN", 0, "root"),
        (6, "of", "ADP", 9, "case"),
        (7, "nesting", "ADJ", 9, "amod"),
        (8, "wooden", "ADJ", 9, "amod"),
        (9, "dolls", "NOUN", 5, "nmod"),
        (10, ".", "PUNCT", 5, "punct"),
    ]),
    ("def018", "goblet drum", [
        (1, "A", "DET", 2, "det"),
        (2, "djembe", "NOUN", 6, "nsubj"),
        (3, "is", "AUX", 6, "cop"),
        (4, "a", "DET", 6, "det"),
        (5, "goblet", "NOUN", 6, "compound"),
        (6, "drum", "NOUN", 0, "root"),
        (7, "from", "ADP", 9, "case"),
        (8, "West", "PROPN", 9, "compound"),
        (9, "Africa", "PROPN", 6, "nmod"),
        (10, ".", "PUNCT", 6, "punct"),
    ]),
    ("def019", "small wooden boat", [
        (1, "A", "DET", 2, "det"),
        (2, "sampan", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "a", "DET", 7, "det"),
        (5, "small", "ADJ", 7, "amod"),
        (6, "wooden", "ADJ", 7, "amod"),
        (7, "boat", "NOUN", 0, "root"),
        (8, "of", "ADP", 10, "case"),
        (9, "the", "DET", 10, "det"),
        (10, "rivers", "NOUN", 7, "nmod"),
        (11, ".", "PUNCT", 7, "punct"),
    ]),
    ("def020", "dyeing technique", [
        (1, "Batik", "NOUN", 5, "nsubj"),
        (2, "is", "AUX", 5, "cop"),
        (3, "a", "DET", 5, "det"),
        (4, "dyeing", "NOUN", 5, "compound"),
        (5, "technique", "NOUN", 0, "root"),
        (6, "using", "VERB", 5, "acl"),
        (7, "wax", "NOUN", 6, "obj"),
        (8, ".", "PUNCT", 5, "punct"),
    ]),
    ("def021", "ceremony", [
        (1, "The", "DET", 2, "det"),
        (2, "ceremony", "NOUN", 3, "nsubj"),
        (3, "begins", "VERB", 0, "root"),
        (4, "with", "ADP", 7, "case"),
        (5, "a", "DET", 7, "det"),
        (6, "ritual", "ADJ", 7, "amod"),
        (7, "dance", "NOUN", 3, "obl"),
        (8, ".", "PUNCT", 3, "punct"),
    ]),
    ("def022", "ancient burial mound", [
        (1, "A", "DET", 2, "det"),
        (2, "kofun", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "an", "DET", 7, "det"),
        (5, "ancient", "ADJ", 7, "amod"),
        (6, "burial", "NOUN", 7, "compound"),
        (7, "mound", "NOUN", 0, "root"),
        (8, "in", "ADP", 9, "case"),
        (9, "Japan", "PROPN", 7, "nmod"),
        (10, ".", "PUNCT", 7, "punct"),
    ]),
    ("def023", "recording device", [
        (1, "A", "DET", 2, "det"),
        (2, "quipu", "NOUN", 6, "nsubj"),
        (3, "is", "AUX", 6, "cop"),
        (4, "a", "DET", 6, "det"),
        (5, "recording", "NOUN", 6, "compound"),
        (6, "device", "NOUN", 0, "root"),
        (7, "of", "ADP", 9, "case"),
        (8, "knotted", "ADJ", 9, "amod"),
        (9, "cords", "NOUN", 6, "nmod"),
        (10, ".", "PUNCT", 6, "punct"),
    ]),
    ("def024", "unrefined cane sugar", [
        (1, "A", "DET", 2, "det"),
        (2, "panela", "NOUN", 7, "nsubj"),
        (3, "is", "AUX", 7, "cop"),
        (4, "an", "DET", 7, "det"),
        (5, "unrefined", "ADJ", 7, "amod"),
        (6, "cane", "NOUN", 7, "compound"),
        (7, "sugar", "NOUN", 0, "root"),
        (8, "from", "ADP", 10, "case"),
        (9, "Latin", "ADJ", 10, "amod"),
        (10, "America", "PROPN", 7, "nmod"),
        (11, ".", "PUNCT", 7, "punct"),
    ]),
    ("def025", "stringed instrument", [
        (1, "A", "DET", 2, "det"),
        (2, "banjo", "NOUN", 6, "nsubj"),
        (3, "is", "AUX", 6, "cop"),
        (4, "a", "DET", 6, "det"),
        (5, "stringed", "ADJ", 6, "amod"),
        (6, "instrument", "NOUN", 0, "root"),
        (7, "with", "ADP", 10, "case"),
        (8, "a", "DET", 10, "det"),
        (9, "round", "ADJ", 10, "amod"),
        (10, "body", "NOUN", 6, "nmod"),
        (11, ".", "PUNCT", 6, "punct"),
    ]),
]


def to_tokens(rows: list[tuple]) -> list[ParseToken]:
    return [ParseToken(index=i, surface=s, upos=u, head=h, deprel=d)
            for i, s, u, h, d in rows]


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    write_parse_file(FIXTURES / "caption_parses.conllu",
                     [(sid, to_tokens(rows)) for sid, _, rows in CAPTION_SENTENCES])
    write_parse_file(FIXTURES / "definition_parses.conllu",
                     [(sid, to_tokens(rows)) for sid, _, rows in DEFINITION_SENTENCES])
    gold = (
        [{"id": sid, "kind": "concept", "phrase": phrase}
         for sid, phrase, _ in CAPTION_SENTENCES]
        + [{"id": sid, "kind": "category", "phrase": phrase}
           for sid, phrase, _ in DEFINITION_SENTENCES]
    )
    (FIXTURES / "extraction_gold.json").write_text(json.dumps(gold, indent=1))

    table = make_embedding_table(seed=7)
    write_embedding_table(FIXTURES / "embeddings.vec", table)

    kb = make_knowledge_base(200, seed=11)
    write_knowledge_base(FIXTURES / "kb.jsonl", kb)

    records = make_records(40, kb, seed=13, feature_dim=8)
    write_records(FIXTURES / "records.jsonl", records)

    # A small task over the same record world: the first four concepts as
    # classes, their records as gold-labeled items.
    from knowvl.zeroshot import ZeroShotTask, write_zero_shot_task

    classes = [(c.name, c.knowledge) for c in kb[:4]]
    items = [records[i].copy() for i in range(4)]
    write_zero_shot_task(FIXTURES / "task.json",
                         ZeroShotTask(classes=classes, items=items,
                                      gold=[0, 1, 2, 3]))

    detections = {
        rec.image_id: (rec.width, rec.height, rec.objects) for rec in records[:12]
    }
    write_detections(FIXTURES / "detections.jsonl", detections)
    manifest = {
        "images": len(detections),
        "feature_dim": 8,
        "objects": {iid: len(objs) for iid, (_, _, objs) in detections.items()},
        "tag_multisets": {
            iid: sorted(o.tag for o in objs)
            for iid, (_, _, objs) in detections.items()
        },
    }
    (FIXTURES / "detections_manifest.json").write_text(json.dumps(manifest, indent=1,
                                                                  sort_keys=True))
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
