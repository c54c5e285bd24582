"""Domain types and on-disk data formats.

Formats
-------
Parse file
    UTF-8 text, one token per line with 10 tab-separated columns
    (ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL DEPS MISC). Only ID, FORM,
    UPOS, HEAD and DEPREL are consumed, so the output of any standard
    dependency parser drops in. ``#``-prefixed comment lines may carry
    ``sentence_id = <id>``; a blank line ends a sentence.

Detections / records file
    Line-delimited JSON. The first line is a header record carrying
    ``format_version`` and ``feature_dim``; every following line is one image:
    ``{image_id, width, height, objects: [{tag, bbox: [x, y, w, h], score,
    feature: [...]}]}``. Records files use the same schema plus ``caption``
    and optional ``concept_name`` / ``knowledge`` fields per image.

Embedding table
    Word-vector text dump: optional ``<count> <dim>`` header line, then
    ``<word> <f1> ... <fD>`` per line, space separated.

Knowledge base
    Line-delimited JSON, one ``{name, category, knowledge}`` record per line.

Corpus
    Line-delimited JSON. The first line is a manifest record (seed, config
    hash, ratios, realized label counts, vocabulary); every following line is
    one training example.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import (
    CorpusManifestMismatch,
    CyclicHeads,
    DanglingHead,
    DimensionMismatch,
    EmptyTable,
    MalformedRow,
    MissingField,
    MultipleRoots,
    NegativeBox,
    RaggedVector,
    ValidationError,
)

PARSE_COLUMNS = 10
DETECTIONS_FORMAT_VERSION = 1
CORPUS_FORMAT_VERSION = 1

NOUN_TAGS = frozenset({"NOUN", "PROPN"})


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParseToken:
    """One token of a dependency parse.

    ``index`` is 1-based; ``head`` is the index of the governing token, with
    0 marking the sentence root.
    """

    index: int
    surface: str
    upos: str
    head: int
    deprel: str

    @property
    def is_noun(self) -> bool:
        return self.upos in NOUN_TAGS


@dataclass
class DetectedObject:
    """One detector region: tag, pixel box, feature vector.

    ``concept_override`` is set by the concept-locating pass and replaces the
    detector tag wherever tags enter model inputs.
    """

    tag: str
    bbox: tuple[float, float, float, float]  # (x, y, w, h) in pixels
    feature: np.ndarray
    score: float = 1.0
    concept_override: str | None = None

    def __post_init__(self) -> None:
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0 or x < 0 or y < 0:
            raise NegativeBox(f"invalid bbox {self.bbox!r}: need x,y >= 0 and w,h > 0")
        self.feature = np.asarray(self.feature, dtype=np.float64)
        if self.feature.ndim != 1:
            raise DimensionMismatch("object feature must be a flat vector")

    @property
    def area(self) -> float:
        return self.bbox[2] * self.bbox[3]

    @property
    def effective_tag(self) -> str:
        return self.concept_override if self.concept_override is not None else self.tag

    def copy(self) -> "DetectedObject":
        return DetectedObject(
            tag=self.tag,
            bbox=self.bbox,
            feature=self.feature.copy(),
            score=self.score,
            concept_override=self.concept_override,
        )


@dataclass
class ImageRecord:
    """One image flowing through the pipeline: caption, detected objects, and
    (once attached) its visual concept and knowledge text.

    ``width``/``height`` are the image dimensions in pixels; box geometry is
    normalized against them at assembly time.
    """

    image_id: str
    caption: str
    width: int
    height: int
    objects: list[DetectedObject]
    concept_name: str | None = None
    knowledge: str | None = None

    def copy(self) -> "ImageRecord":
        return ImageRecord(
            image_id=self.image_id,
            caption=self.caption,
            width=self.width,
            height=self.height,
            objects=[o.copy() for o in self.objects],
            concept_name=self.concept_name,
            knowledge=self.knowledge,
        )


@dataclass(frozen=True)
class VisualConcept:
    """A named visual concept with its mined category phrase and the
    descriptive knowledge text attached to it."""

    name: str
    category: str
    knowledge: str

    def __post_init__(self) -> None:
        if not self.category:
            raise MissingField(f"concept {self.name!r} has an empty category")
        if not self.knowledge:
            raise MissingField(f"concept {self.name!r} has empty knowledge text")


@dataclass
class EmbeddingTable:
    """Word -> vector store; phrase embeddings are pooled from it."""

    dimension: int
    entries: dict[str, np.ndarray]
    _unit_cache: dict[str, np.ndarray] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise DimensionMismatch(f"dimension must be positive, got {self.dimension}")
        if not self.entries:
            raise EmptyTable("embedding table has no entries")
        for word, vec in self.entries.items():
            if vec.shape != (self.dimension,):
                raise DimensionMismatch(
                    f"vector for {word!r} has length {vec.shape}, expected {self.dimension}"
                )

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __getitem__(self, word: str) -> np.ndarray:
        return self.entries[word]


@dataclass
class TrainingExample:
    """A fully assembled model input with all four objectives' supervision.

    ``token_ids`` already carry the frozen MLM corruption; the original ids
    of the masked positions live in ``mlm_targets``.
    """

    token_ids: list[int]
    segment_ids: list[int]
    visual_features: np.ndarray  # (n_obj, feature_dim + 6)
    mlm_positions: list[int]
    mlm_targets: list[int]
    itm_label: int
    ikm_label: int
    iec_label: int
    source_image_id: str

    def validate(self, *, max_text_tokens: int = 70, max_objects: int = 50,
                 special_ids: Sequence[int] = (), mask_id: int | None = None) -> None:
        if len(self.token_ids) != len(self.segment_ids):
            raise ValidationError("token_ids and segment_ids lengths differ")
        if len(self.token_ids) > max_text_tokens:
            raise ValidationError(
                f"{len(self.token_ids)} text tokens exceed the budget of {max_text_tokens}"
            )
        if self.visual_features.ndim != 2:
            raise ValidationError("visual_features must be a 2-D matrix")
        if self.visual_features.shape[0] > max_objects:
            raise ValidationError(
                f"{self.visual_features.shape[0]} objects exceed the cap of {max_objects}"
            )
        if len(self.mlm_positions) != len(self.mlm_targets):
            raise ValidationError("mlm_positions and mlm_targets lengths differ")
        specials = set(special_ids)
        for pos, target in zip(self.mlm_positions, self.mlm_targets):
            if not 0 <= pos < len(self.token_ids):
                raise ValidationError(f"mlm position {pos} out of range")
            # The original token at a masked position must not be special;
            # the corrupted token there may only be [MASK] or a regular id.
            if specials and target in specials:
                raise ValidationError(f"special token masked at position {pos}")
            current = self.token_ids[pos]
            if specials and current in specials and current != mask_id:
                raise ValidationError(
                    f"masked position {pos} holds special id {current} != [MASK]"
                )
        if self.itm_label not in (0, 1, 2):
            raise ValidationError(f"itm_label {self.itm_label} outside {{0,1,2}}")
        if self.ikm_label not in (0, 1, 2):
            raise ValidationError(f"ikm_label {self.ikm_label} outside {{0,1,2}}")
        if self.iec_label not in (0, 1):
            raise ValidationError(f"iec_label {self.iec_label} outside {{0,1}}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrainingExample):
            return NotImplemented
        return (
            self.token_ids == other.token_ids
            and self.segment_ids == other.segment_ids
            and np.array_equal(self.visual_features, other.visual_features)
            and self.mlm_positions == other.mlm_positions
            and self.mlm_targets == other.mlm_targets
            and self.itm_label == other.itm_label
            and self.ikm_label == other.ikm_label
            and self.iec_label == other.iec_label
            and self.source_image_id == other.source_image_id
        )


@dataclass
class CorpusManifest:
    """Header record of a corpus file: everything needed to reproduce or
    consume the corpus (seed, config hash, ratios, realized counts, vocab)."""

    seed: int
    config_hash: str
    record_count: int
    visual_dim: int
    max_text_tokens: int
    max_objects: int
    mlm_rate: float
    itm_type_ratio: tuple[int, ...]
    ikm_type_ratio: tuple[int, ...]
    iec_type_ratio: tuple[int, ...]
    itm_counts: tuple[int, ...]
    ikm_counts: tuple[int, ...]
    iec_counts: tuple[int, ...]
    mlm_masked_positions: int
    mlm_maskable_positions: int
    vocab_tokens: list[str]
    shards: int = 1
    format_version: int = CORPUS_FORMAT_VERSION

    def to_json_dict(self) -> dict:
        d = {
            "record_type": "manifest",
            "format_version": self.format_version,
            # Masking is decided here, not at train time; a corpus file fully
            # determines training.
            "masking": "frozen-at-assembly",
            "seed": self.seed,
            "config_hash": self.config_hash,
            "record_count": self.record_count,
            "visual_dim": self.visual_dim,
            "max_text_tokens": self.max_text_tokens,
            "max_objects": self.max_objects,
            "mlm_rate": self.mlm_rate,
            "itm_type_ratio": list(self.itm_type_ratio),
            "ikm_type_ratio": list(self.ikm_type_ratio),
            "iec_type_ratio": list(self.iec_type_ratio),
            "itm_counts": list(self.itm_counts),
            "ikm_counts": list(self.ikm_counts),
            "iec_counts": list(self.iec_counts),
            "mlm_masked_positions": self.mlm_masked_positions,
            "mlm_maskable_positions": self.mlm_maskable_positions,
            "vocab_tokens": self.vocab_tokens,
            "shards": self.shards,
        }
        return d

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "CorpusManifest":
        try:
            return cls(
                seed=d["seed"],
                config_hash=d["config_hash"],
                record_count=d["record_count"],
                visual_dim=d["visual_dim"],
                max_text_tokens=d["max_text_tokens"],
                max_objects=d["max_objects"],
                mlm_rate=d["mlm_rate"],
                itm_type_ratio=tuple(d["itm_type_ratio"]),
                ikm_type_ratio=tuple(d["ikm_type_ratio"]),
                iec_type_ratio=tuple(d["iec_type_ratio"]),
                itm_counts=tuple(d["itm_counts"]),
                ikm_counts=tuple(d["ikm_counts"]),
                iec_counts=tuple(d["iec_counts"]),
                mlm_masked_positions=d["mlm_masked_positions"],
                mlm_maskable_positions=d["mlm_maskable_positions"],
                vocab_tokens=list(d["vocab_tokens"]),
                shards=d.get("shards", 1),
                format_version=d.get("format_version", CORPUS_FORMAT_VERSION),
            )
        except KeyError as exc:
            raise MissingField(f"corpus manifest missing field {exc.args[0]!r}") from exc


def config_hash(payload: Mapping) -> str:
    """Stable sha256 over a canonical JSON encoding of a config mapping."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Parse files
# ---------------------------------------------------------------------------

def validate_parse(tokens: Sequence[ParseToken], *, where: str = "sentence") -> None:
    """Enforce the parse invariants: contiguous 1-based ids, exactly one
    root, heads in range, every token reaching the root."""
    n = len(tokens)
    for expected, tok in enumerate(tokens, start=1):
        if tok.index != expected:
            raise MalformedRow(f"{where}: token ids not contiguous from 1 at {tok.index}")
    roots = [t.index for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise MultipleRoots(f"{where}: expected exactly one root, found {len(roots)}")
    for tok in tokens:
        if tok.head != 0 and not 1 <= tok.head <= n:
            raise DanglingHead(
                f"{where}: token {tok.index} ({tok.surface!r}) has head {tok.head} "
                f"but the sentence has {n} tokens"
            )
    for tok in tokens:
        seen: set[int] = set()
        cur = tok
        while cur.head != 0:
            if cur.index in seen:
                raise CyclicHeads(f"{where}: head links cycle through token {tok.index}")
            seen.add(cur.index)
            cur = tokens[cur.head - 1]


def read_parse_file(path: str | Path) -> list[tuple[str, list[ParseToken]]]:
    """Read every sentence of a parse file.

    Returns ``(sentence_id, tokens)`` pairs in file order. Sentences without
    an explicit ``sentence_id`` comment get sequential ids ``s1, s2, ...``.
    Structural problems raise with the offending line number in the message.
    """
    sentences: list[tuple[str, list[ParseToken]]] = []
    pending_id: str | None = None
    rows: list[tuple[int, ParseToken]] = []
    auto_id = 0

    def flush() -> None:
        nonlocal pending_id, rows, auto_id
        if not rows:
            pending_id = None
            return
        auto_id += 1
        sid = pending_id if pending_id is not None else f"s{auto_id}"
        first_line = rows[0][0]
        tokens = [tok for _, tok in rows]
        try:
            validate_parse(tokens, where=f"sentence {sid!r} (line {first_line})")
        except DanglingHead:
            # Re-raise naming the exact offending line.
            n = len(tokens)
            for lineno, tok in rows:
                if tok.head != 0 and not 1 <= tok.head <= n:
                    raise DanglingHead(
                        f"line {lineno}: token {tok.index} ({tok.surface!r}) has head "
                        f"{tok.head} but sentence {sid!r} has {n} tokens"
                    ) from None
            raise
        sentences.append((sid, tokens))
        pending_id = None
        rows = []

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("sentence_id"):
                    _, _, value = body.partition("=")
                    pending_id = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) != PARSE_COLUMNS:
                raise MalformedRow(
                    f"line {lineno}: expected {PARSE_COLUMNS} tab-separated columns, "
                    f"got {len(cols)}"
                )
            token_id = cols[0]
            if "-" in token_id or "." in token_id:
                continue  # multi-word token range / empty node: not consumed
            try:
                index = int(token_id)
                head = int(cols[6])
            except ValueError as exc:
                raise MalformedRow(f"line {lineno}: non-integer ID or HEAD column") from exc
            rows.append(
                (lineno, ParseToken(index=index, surface=cols[1], upos=cols[3],
                                    head=head, deprel=cols[7]))
            )
    flush()
    return sentences


def write_parse_file(path: str | Path,
                     sentences: Iterable[tuple[str, Sequence[ParseToken]]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, tokens in sentences:
            fh.write(f"# sentence_id = {sid}\n")
            for tok in tokens:
                cols = [str(tok.index), tok.surface, tok.surface.lower(), tok.upos,
                        "_", "_", str(tok.head), tok.deprel, "_", "_"]
                fh.write("\t".join(cols) + "\n")
            fh.write("\n")


# ---------------------------------------------------------------------------
# Detections / records files
# ---------------------------------------------------------------------------

def _parse_object(d: Mapping, *, feature_dim: int | None, where: str) -> DetectedObject:
    for key in ("tag", "bbox", "feature"):
        if key not in d:
            raise MissingField(f"{where}: object missing {key!r}")
    bbox = d["bbox"]
    if len(bbox) != 4:
        raise MalformedRow(f"{where}: bbox must have 4 entries")
    x, y, w, h = (float(v) for v in bbox)
    if w <= 0 or h <= 0 or x < 0 or y < 0:
        raise NegativeBox(f"{where}: invalid bbox {bbox!r}")
    feature = np.asarray(d["feature"], dtype=np.float64)
    if feature_dim is not None and feature.shape != (feature_dim,):
        raise DimensionMismatch(
            f"{where}: feature length {feature.shape[0]} != table dimension {feature_dim}"
        )
    if "area" in d:
        stored = d["area"]
        if stored != w * h:
            raise ValidationError(
                f"{where}: stored area {stored!r} != recomputed {w * h!r}"
            )
    return DetectedObject(tag=str(d["tag"]), bbox=(x, y, w, h), feature=feature,
                          score=float(d.get("score", 1.0)))


def _iter_image_lines(path: str | Path):
    """Yield (lineno, dict) for every image line, checking the header."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            return
        header = json.loads(first)
        if "image_id" in header:
            raise MissingField(f"{path}: first line must be a format header record")
        if header.get("format_version") != DETECTIONS_FORMAT_VERSION:
            raise ValidationError(
                f"{path}: unsupported format_version {header.get('format_version')!r}"
            )
        feature_dim = header.get("feature_dim")
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            yield lineno, json.loads(raw), feature_dim


def read_detections(path: str | Path) -> dict[str, list[DetectedObject]]:
    """Map image_id -> detected objects. Feature dimension must be uniform."""
    out: dict[str, list[DetectedObject]] = {}
    feature_dim: int | None = None
    for lineno, rec, header_dim in _iter_image_lines(path):
        if feature_dim is None:
            feature_dim = header_dim
        if "image_id" not in rec:
            raise MissingField(f"{path} line {lineno}: record missing 'image_id'")
        objects = []
        for d in rec.get("objects", []):
            obj = _parse_object(d, feature_dim=feature_dim,
                                where=f"{path} line {lineno}")
            if feature_dim is None:
                feature_dim = obj.feature.shape[0]
            objects.append(obj)
        out[str(rec["image_id"])] = objects
    return out


def read_records(path: str | Path) -> list[ImageRecord]:
    """Read full image records (detections schema plus caption/concept fields)."""
    records: list[ImageRecord] = []
    feature_dim: int | None = None
    for lineno, rec, header_dim in _iter_image_lines(path):
        if feature_dim is None:
            feature_dim = header_dim
        where = f"{path} line {lineno}"
        for key in ("image_id", "width", "height", "caption"):
            if key not in rec:
                raise MissingField(f"{where}: record missing {key!r}")
        objects = []
        for d in rec.get("objects", []):
            obj = _parse_object(d, feature_dim=feature_dim, where=where)
            if feature_dim is None:
                feature_dim = obj.feature.shape[0]
            objects.append(obj)
        records.append(
            ImageRecord(
                image_id=str(rec["image_id"]),
                caption=str(rec["caption"]),
                width=int(rec["width"]),
                height=int(rec["height"]),
                objects=objects,
                concept_name=rec.get("concept_name"),
                knowledge=rec.get("knowledge"),
            )
        )
    return records


def _object_to_dict(obj: DetectedObject) -> dict:
    return {
        "tag": obj.tag,
        "bbox": list(obj.bbox),
        "area": obj.bbox[2] * obj.bbox[3],
        "score": obj.score,
        "feature": obj.feature.tolist(),
    }


def write_records(path: str | Path, records: Iterable[ImageRecord], *,
                  feature_dim: int | None = None) -> None:
    records = list(records)
    if feature_dim is None:
        for rec in records:
            if rec.objects:
                feature_dim = rec.objects[0].feature.shape[0]
                break
    with open(path, "w", encoding="utf-8") as fh:
        _dump_line(fh, {"format_version": DETECTIONS_FORMAT_VERSION,
                        "record_kind": "records", "feature_dim": feature_dim})
        for rec in records:
            d = {
                "image_id": rec.image_id,
                "width": rec.width,
                "height": rec.height,
                "caption": rec.caption,
                "objects": [_object_to_dict(o) for o in rec.objects],
            }
            if rec.concept_name is not None:
                d["concept_name"] = rec.concept_name
            if rec.knowledge is not None:
                d["knowledge"] = rec.knowledge
            _dump_line(fh, d)


def write_detections(path: str | Path,
                     detections: Mapping[str, tuple[int, int, Sequence[DetectedObject]]],
                     *, feature_dim: int | None = None) -> None:
    """Write a pure detections file; values are (width, height, objects)."""
    if feature_dim is None:
        for _, _, objs in detections.values():
            if objs:
                feature_dim = objs[0].feature.shape[0]
                break
    with open(path, "w", encoding="utf-8") as fh:
        _dump_line(fh, {"format_version": DETECTIONS_FORMAT_VERSION,
                        "record_kind": "detections", "feature_dim": feature_dim})
        for image_id, (width, height, objs) in detections.items():
            _dump_line(fh, {
                "image_id": image_id,
                "width": width,
                "height": height,
                "objects": [_object_to_dict(o) for o in objs],
            })


# ---------------------------------------------------------------------------
# Embedding tables
# ---------------------------------------------------------------------------

def read_embedding_table(path: str | Path) -> EmbeddingTable:
    """Read a word-vector text dump.

    An optional first line ``<count> <dim>`` is honored; otherwise the
    dimension is inferred from the first vector line. Duplicate words keep
    the first occurrence and emit a warning.
    """
    entries: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.rstrip("\n").split(" ")
            parts = [p for p in parts if p != ""]
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    _count, dim = int(parts[0]), int(parts[1])
                except ValueError:
                    pass
                else:
                    dimension = dim
                    continue
            word, floats = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in floats], dtype=np.float64)
            except ValueError as exc:
                raise RaggedVector(f"line {lineno}: non-numeric vector entry") from exc
            if dimension is None:
                dimension = vec.shape[0]
            if vec.shape[0] != dimension:
                raise RaggedVector(
                    f"line {lineno}: {vec.shape[0]} floats for {word!r}, expected {dimension}"
                )
            if word in entries:
                warnings.warn(f"duplicate word {word!r} at line {lineno}; keeping first",
                              stacklevel=2)
                continue
            entries[word] = vec
    if dimension is None or not entries:
        raise EmptyTable(f"{path}: no embedding entries found")
    return EmbeddingTable(dimension=dimension, entries=entries)


def write_embedding_table(path: str | Path, table: EmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.entries)} {table.dimension}\n")
        for word, vec in table.entries.items():
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


# ---------------------------------------------------------------------------
# Knowledge base
# ---------------------------------------------------------------------------

def read_knowledge_base(path: str | Path) -> list[VisualConcept]:
    concepts: list[VisualConcept] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            d = json.loads(raw)
            for key in ("name", "category", "knowledge"):
                if key not in d or not d[key]:
                    raise MissingField(f"{path} line {lineno}: missing {key!r}")
            concepts.append(VisualConcept(name=d["name"], category=d["category"],
                                          knowledge=d["knowledge"]))
    return concepts


def write_knowledge_base(path: str | Path, concepts: Iterable[VisualConcept]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in concepts:
            _dump_line(fh, {"name": c.name, "category": c.category,
                            "knowledge": c.knowledge})


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

def _example_to_dict(ex: TrainingExample) -> dict:
    return {
        "token_ids": ex.token_ids,
        "segment_ids": ex.segment_ids,
        "visual_features": ex.visual_features.tolist(),
        "mlm_positions": ex.mlm_positions,
        "mlm_targets": ex.mlm_targets,
        "itm_label": ex.itm_label,
        "ikm_label": ex.ikm_label,
        "iec_label": ex.iec_label,
        "source_image_id": ex.source_image_id,
    }


def _example_from_dict(d: Mapping, *, where: str) -> TrainingExample:
    try:
        return TrainingExample(
            token_ids=list(d["token_ids"]),
            segment_ids=list(d["segment_ids"]),
            visual_features=np.asarray(d["visual_features"], dtype=np.float64).reshape(
                len(d["visual_features"]), -1
            ),
            mlm_positions=list(d["mlm_positions"]),
            mlm_targets=list(d["mlm_targets"]),
            itm_label=int(d["itm_label"]),
            ikm_label=int(d["ikm_label"]),
            iec_label=int(d["iec_label"]),
            source_image_id=str(d["source_image_id"]),
        )
    except KeyError as exc:
        raise MissingField(f"{where}: example missing {exc.args[0]!r}") from exc


def write_corpus(path: str | Path, examples: Sequence[TrainingExample],
                 manifest: CorpusManifest) -> None:
    if manifest.record_count != len(examples):
        raise CorpusManifestMismatch(
            f"manifest says {manifest.record_count} examples, got {len(examples)}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        _dump_line(fh, manifest.to_json_dict())
        for ex in examples:
            _dump_line(fh, _example_to_dict(ex))


def read_corpus(path: str | Path) -> tuple[CorpusManifest, list[TrainingExample]]:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise MissingField(f"{path}: empty corpus file")
        head = json.loads(first)
        if head.get("record_type") != "manifest":
            raise MissingField(f"{path}: first record must be the manifest")
        manifest = CorpusManifest.from_json_dict(head)
        examples = []
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            examples.append(_example_from_dict(json.loads(raw), where=f"{path} line {lineno}"))
    if len(examples) != manifest.record_count:
        raise CorpusManifestMismatch(
            f"{path}: manifest says {manifest.record_count} examples, file has {len(examples)}"
        )
    return manifest, examples


def _dump_line(fh: TextIO, payload: Mapping) -> None:
    fh.write(json.dumps(payload, sort_keys=True, separators=(",", ":"),
                        ensure_ascii=False))
    fh.write("\n")
