"""Turning image records plus sampler outputs into labeled training examples.

Every example lays out the model input as ``[CLS] caption [SEP] knowledge
[SEP] tags [SEP] visual`` and carries the supervision of all four
objectives. Corruption labels are drawn per objective from configured
ratios; the draws for different objectives are independent, and within one
objective a deficit-weighted scheduler keeps the realized corpus ratios on
target even when a sampler falls back (no dissimilar concept / no valid
donor means the example degrades to its uncorrupted type).

Masking is frozen at assembly time so a corpus file fully determines
training; the manifest records the seed, config hash, and realized counts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .base import check_fraction, check_positive
from .errors import NoDissimilarConcept, NoValidDonor, ValidationError
from .formats import (
    CorpusManifest,
    DetectedObject,
    EmbeddingTable,
    ImageRecord,
    TrainingExample,
    VisualConcept,
    config_hash,
)
from .sampling import (
    SamplerConfig,
    apply_replacement,
    locate_concept_with_audit,
    propagate_concept,
    select_iec_replacement_with_audit,
    select_type2_knowledge_with_audit,
    select_type3_knowledge_with_audit,
)

_WORD_RE = re.compile(r"[a-z0-9']+")

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP, MASK)

SEGMENT_CAPTION, SEGMENT_KNOWLEDGE, SEGMENT_TAGS, SEGMENT_VISUAL = 0, 1, 2, 3
N_GEOMETRY = 6


@dataclass
class Vocabulary:
    """Ordered token list with the five special tokens first ([PAD] id 0)."""

    tokens: list[str]

    def __post_init__(self) -> None:
        if list(self.tokens[: len(SPECIAL_TOKENS)]) != list(SPECIAL_TOKENS):
            raise ValidationError(
                f"vocabulary must start with the specials {SPECIAL_TOKENS}"
            )
        if len(set(self.tokens)) != len(self.tokens):
            raise ValidationError("vocabulary contains duplicate tokens")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    @property
    def cls_id(self) -> int:
        return 2

    @property
    def sep_id(self) -> int:
        return 3

    @property
    def mask_id(self) -> int:
        return 4

    @property
    def special_ids(self) -> tuple[int, ...]:
        return (0, 1, 2, 3, 4)

    @property
    def regular_ids(self) -> range:
        return range(len(SPECIAL_TOKENS), len(self.tokens))


def word_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def build_vocabulary(texts: Iterable[str]) -> Vocabulary:
    """Deterministic vocabulary: specials, then words by descending count,
    ties alphabetical."""
    counts: dict[str, int] = {}
    for text in texts:
        for w in word_tokens(text):
            counts[w] = counts.get(w, 0) + 1
    ordered = sorted(counts, key=lambda w: (-counts[w], w))
    return Vocabulary(list(SPECIAL_TOKENS) + ordered)


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Lowercase, split on whitespace/punctuation, map OOV to [UNK]."""
    unk = vocab.unk_id
    return [vocab.index.get(w, unk) for w in word_tokens(text)]


@dataclass
class AssemblyConfig:
    mlm_rate: float = 0.15
    itm_type_ratio: tuple[int, int, int] = (2, 1, 1)
    ikm_type_ratio: tuple[int, int, int] = (2, 1, 1)
    iec_type_ratio: tuple[int, int] = (1, 1)
    max_text_tokens: int = 70
    max_objects: int = 50
    knowledge_token_budget: int = 40
    rng_seed: int = 0

    def __post_init__(self) -> None:
        check_fraction("mlm_rate", self.mlm_rate)
        for name, ratio in (("itm_type_ratio", self.itm_type_ratio),
                            ("ikm_type_ratio", self.ikm_type_ratio),
                            ("iec_type_ratio", self.iec_type_ratio)):
            if any(r <= 0 for r in ratio):
                raise ValidationError(f"{name} entries must be positive, got {ratio}")
        check_positive("max_text_tokens", self.max_text_tokens)
        check_positive("max_objects", self.max_objects)

    def to_json_dict(self) -> dict:
        return {
            "mlm_rate": self.mlm_rate,
            "itm_type_ratio": list(self.itm_type_ratio),
            "ikm_type_ratio": list(self.ikm_type_ratio),
            "iec_type_ratio": list(self.iec_type_ratio),
            "max_text_tokens": self.max_text_tokens,
            "max_objects": self.max_objects,
            "knowledge_token_budget": self.knowledge_token_budget,
        }


# ---------------------------------------------------------------------------
# Input layout
# ---------------------------------------------------------------------------

def kept_objects(objects: Sequence[DetectedObject], max_objects: int) -> list[DetectedObject]:
    """Objects that survive the cap: largest pixel areas first, ties by
    original index."""
    order = sorted(range(len(objects)), key=lambda i: (-objects[i].area, i))
    return [objects[i] for i in order[:max_objects]]


def geometry_features(obj: DetectedObject, width: int, height: int) -> np.ndarray:
    """Six normalized box values appended to each region feature:
    x/W, y/H, w/W, h/H, area/(W*H), aspect ratio."""
    x, y, w, h = obj.bbox
    return np.array([x / width, y / height, w / width, h / height,
                     (w * h) / (width * height), w / h], dtype=np.float64)


def build_input(
    caption: str,
    knowledge: str,
    tags: Sequence[str],
    objects: Sequence[DetectedObject],
    vocab: Vocabulary,
    cfg: AssemblyConfig,
    *,
    width: int,
    height: int,
) -> tuple[list[int], list[int], np.ndarray]:
    """Compose one model input.

    Text layout is ``[CLS] c [SEP] k [SEP] t [SEP]``; when the token budget
    overflows, knowledge is truncated first, then the caption, then the
    tags. Objects beyond ``max_objects`` are dropped smallest-first; each
    surviving row is the region feature with six geometry values appended.
    """
    c = tokenize(caption, vocab)
    k = tokenize(knowledge, vocab)
    t = tokenize(" ".join(tags), vocab)

    budget = cfg.max_text_tokens - 4  # [CLS] + three [SEP]
    if budget < 0:
        raise ValidationError("max_text_tokens must be at least 4")
    overflow = len(c) + len(k) + len(t) - budget
    if overflow > 0:
        cut = min(overflow, len(k))
        k = k[: len(k) - cut]
        overflow -= cut
    if overflow > 0:
        cut = min(overflow, len(c))
        c = c[: len(c) - cut]
        overflow -= cut
    if overflow > 0:
        t = t[: len(t) - overflow]

    token_ids = [vocab.cls_id, *c, vocab.sep_id, *k, vocab.sep_id, *t, vocab.sep_id]
    segment_ids = (
        [SEGMENT_CAPTION] * (len(c) + 2)
        + [SEGMENT_KNOWLEDGE] * (len(k) + 1)
        + [SEGMENT_TAGS] * (len(t) + 1)
    )

    keep = kept_objects(objects, cfg.max_objects)
    if keep:
        rows = [np.concatenate([o.feature, geometry_features(o, width, height)])
                for o in keep]
        visual = np.stack(rows)
    else:
        visual = np.zeros((0, N_GEOMETRY))
    return token_ids, segment_ids, visual


def apply_mlm_mask(
    token_ids: Sequence[int],
    vocab: Vocabulary,
    cfg: AssemblyConfig,
    rng: np.random.Generator,
) -> tuple[list[int], list[int], list[int]]:
    """BERT-style frozen masking.

    Each non-special token is independently selected with probability
    ``mlm_rate``; a selected token becomes [MASK] 80% of the time, a random
    regular token 10%, and stays itself 10%. If nothing gets selected, one
    random maskable token is forced so every example trains the MLM head.
    """
    specials = set(vocab.special_ids)
    maskable = [i for i, tid in enumerate(token_ids) if tid not in specials]
    masked_ids = list(token_ids)
    if not maskable:
        return masked_ids, [], []

    selected = [i for i in maskable if rng.random() < cfg.mlm_rate]
    if not selected:
        selected = [maskable[int(rng.integers(len(maskable)))]]

    positions: list[int] = []
    targets: list[int] = []
    regular = vocab.regular_ids
    for pos in selected:
        positions.append(pos)
        targets.append(masked_ids[pos])
        r = rng.random()
        if r < 0.8:
            masked_ids[pos] = vocab.mask_id
        elif r < 0.9:
            masked_ids[pos] = regular.start + int(rng.integers(len(regular)))
        # else: token left unchanged, still predicted
    return masked_ids, positions, targets


# ---------------------------------------------------------------------------
# Label scheduling
# ---------------------------------------------------------------------------

class RatioScheduler:
    """Random label draws that stay on a target ratio.

    Each draw samples from weights proportional to the remaining
    expected-count deficit of every label, so realized corpus ratios track
    the configured ones while individual assignments stay random. Fallbacks
    are reported back via :meth:`amend`, which repairs the counts so later
    draws compensate.
    """

    def __init__(self, ratio: Sequence[int]):
        total = float(sum(ratio))
        self.shares = [r / total for r in ratio]
        self.counts = [0] * len(ratio)
        self.n = 0

    def draw(self, rng: np.random.Generator) -> int:
        deficits = [
            max(share * (self.n + 1) - count, 0.0)
            for share, count in zip(self.shares, self.counts)
        ]
        total = sum(deficits)
        weights = [d / total for d in deficits] if total > 0 else self.shares
        label = int(rng.choice(len(weights), p=weights))
        self.counts[label] += 1
        self.n += 1
        return label

    def amend(self, drawn: int, realized: int) -> None:
        if drawn != realized:
            self.counts[drawn] -= 1
            self.counts[realized] += 1


# ---------------------------------------------------------------------------
# Per-objective assignment
# ---------------------------------------------------------------------------

def assign_itm(
    record: ImageRecord,
    corpus: Sequence[ImageRecord],
    label: int,
    rng: np.random.Generator,
) -> tuple[str, ImageRecord]:
    """Caption/tag corruption for the matching objective.

    Label 0 keeps both; label 1 swaps the caption with another record's;
    label 2 swaps the tag source with another record. Returns the caption to
    use and the record whose objects supply the tag text.
    """
    if label == 0:
        return record.caption, record
    others = [r for r in corpus if r.image_id != record.image_id]
    if not others:
        raise ValidationError("ITM corruption needs at least two distinct records")
    other = others[int(rng.integers(len(others)))]
    if label == 1:
        return other.caption, record
    return record.caption, other


def assign_ikm(
    record: ImageRecord,
    concept: VisualConcept,
    knowledge_base: list[VisualConcept],
    table: EmbeddingTable,
    label: int,
    sampler_cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[str, int, dict | None]:
    """Knowledge text for the image-knowledge matching objective.

    Label 0 keeps the record's own knowledge; label 1 attaches knowledge of
    a category-dissimilar concept; label 2 attaches knowledge of the most
    category-similar sampled concept. A failed dissimilar draw falls back to
    label 0 (the caller rebalances).
    """
    own = record.knowledge if record.knowledge is not None else concept.knowledge
    if label == 0:
        return own, 0, None
    if label == 1:
        try:
            chosen, audit = select_type2_knowledge_with_audit(
                concept, knowledge_base, table, sampler_cfg, rng
            )
        except NoDissimilarConcept:
            return own, 0, None
        return chosen.knowledge, 1, audit.to_json_dict()
    chosen, audit = select_type3_knowledge_with_audit(
        concept, knowledge_base, table, sampler_cfg, rng
    )
    return chosen.knowledge, 2, audit.to_json_dict()


def assign_iec(
    record: ImageRecord,
    located_index: int,
    corpus: Sequence[ImageRecord],
    concept: VisualConcept,
    table: EmbeddingTable,
    label: int,
    sampler_cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[ImageRecord, int, dict | None]:
    """Optionally swap the located object's feature with a visually close,
    category-dissimilar donor. Falls back to the unmodified image when the
    donor pool filters empty."""
    if label == 0:
        return record, 0, None
    try:
        rep, audit = select_iec_replacement_with_audit(
            record, located_index, list(corpus), concept, table, sampler_cfg, rng
        )
    except NoValidDonor:
        return record, 0, None
    donors = {img.image_id: img for img in corpus}
    modified = apply_replacement(record, rep, donors)
    info = audit.to_json_dict()
    info["replacement"] = {
        "target_object_index": rep.target_object_index,
        "donor_image_id": rep.donor_image_id,
        "donor_object_index": rep.donor_object_index,
        "donor_tag": rep.donor_tag,
        "visual_distance": rep.visual_distance,
        "category_similarity": rep.category_similarity,
    }
    return modified, 1, info


def effective_tags(record: ImageRecord, max_objects: int) -> list[str]:
    return [o.effective_tag for o in kept_objects(record.objects, max_objects)]


# ---------------------------------------------------------------------------
# Corpus building
# ---------------------------------------------------------------------------

@dataclass
class AssemblyFailure:
    image_id: str
    reason: str


@dataclass
class AssemblyResult:
    examples: list[TrainingExample]
    manifest: CorpusManifest
    failures: list[AssemblyFailure]
    audits: list[dict] = field(default_factory=list)


def corpus_vocabulary(records: Sequence[ImageRecord],
                      knowledge_base: Sequence[VisualConcept]) -> Vocabulary:
    texts: list[str] = []
    for rec in records:
        texts.append(rec.caption)
        if rec.knowledge:
            texts.append(rec.knowledge)
        texts.extend(o.tag for o in rec.objects)
        if rec.concept_name:
            texts.append(rec.concept_name)
    for c in knowledge_base:
        texts.append(c.knowledge)
        texts.append(c.name)
    return build_vocabulary(texts)


def _shard_bounds(n: int, shards: int) -> list[tuple[int, int]]:
    base, extra = divmod(n, shards)
    bounds = []
    start = 0
    for s in range(shards):
        size = base + (1 if s < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def build_corpus(
    records: Sequence[ImageRecord],
    knowledge_base: list[VisualConcept],
    assembly_cfg: AssemblyConfig,
    sampler_cfg: SamplerConfig,
    table: EmbeddingTable,
    seed: int,
    *,
    vocab: Vocabulary | None = None,
    shards: int = 1,
    collect_audits: bool = False,
) -> AssemblyResult:
    """Assemble one labeled training example per input record.

    Deterministic in (records, knowledge base, configs, seed, shards): each
    shard derives its generator from ``seed XOR shard_index`` and shard
    outputs are concatenated in shard order. Records that cannot be
    assembled (missing concept, no objects) are skipped and reported.
    """
    if not records:
        raise ValidationError("cannot build a corpus from zero records")
    check_positive("shards", shards)
    if vocab is None:
        vocab = corpus_vocabulary(records, knowledge_base)
    by_name = {c.name.lower(): c for c in knowledge_base}

    examples: list[TrainingExample] = []
    failures: list[AssemblyFailure] = []
    audits: list[dict] = []
    itm_counts = [0, 0, 0]
    ikm_counts = [0, 0, 0]
    iec_counts = [0, 0]
    masked_total = 0
    maskable_total = 0

    for shard_index, (lo, hi) in enumerate(_shard_bounds(len(records), shards)):
        rng = np.random.default_rng(seed ^ shard_index)
        itm_sched = RatioScheduler(assembly_cfg.itm_type_ratio)
        ikm_sched = RatioScheduler(assembly_cfg.ikm_type_ratio)
        iec_sched = RatioScheduler(assembly_cfg.iec_type_ratio)

        for rec in records[lo:hi]:
            audit_entry: dict = {"image_id": rec.image_id}
            try:
                if not rec.objects:
                    raise ValidationError("record has no detected objects")
                if not rec.concept_name:
                    raise ValidationError("record has no concept_name")
                concept = by_name.get(rec.concept_name.lower())
                if concept is None:
                    raise ValidationError(
                        f"concept {rec.concept_name!r} not in knowledge base"
                    )
                work = rec.copy()
                located, locate_audit = locate_concept_with_audit(
                    work, concept, table, sampler_cfg
                )
                propagated = propagate_concept(work, located)
                audit_entry["locate"] = locate_audit.to_json_dict()
                audit_entry["propagated"] = propagated

                itm_label = itm_sched.draw(rng)
                caption_used, tag_source = assign_itm(work, records, itm_label, rng)

                ikm_label = ikm_sched.draw(rng)
                knowledge_used, ikm_realized, ikm_audit = assign_ikm(
                    work, concept, knowledge_base, table, ikm_label,
                    sampler_cfg, rng,
                )
                ikm_sched.amend(ikm_label, ikm_realized)
                audit_entry["ikm"] = ikm_audit

                iec_label = iec_sched.draw(rng)
                record_used, iec_realized, iec_audit = assign_iec(
                    work, located, records, concept, table, iec_label,
                    sampler_cfg, rng,
                )
                iec_sched.amend(iec_label, iec_realized)
                audit_entry["iec"] = iec_audit
                audit_entry["labels"] = {
                    "itm": itm_label, "ikm": ikm_realized, "iec": iec_realized,
                }

                tags = effective_tags(tag_source, assembly_cfg.max_objects)
                token_ids, segment_ids, visual = build_input(
                    caption_used, knowledge_used, tags, record_used.objects,
                    vocab, assembly_cfg,
                    width=record_used.width, height=record_used.height,
                )
                masked_ids, positions, targets = apply_mlm_mask(
                    token_ids, vocab, assembly_cfg, rng
                )
                specials = set(vocab.special_ids)
                masked_total += len(positions)
                maskable_total += sum(1 for t in token_ids if t not in specials)

                example = TrainingExample(
                    token_ids=masked_ids,
                    segment_ids=segment_ids,
                    visual_features=visual,
                    mlm_positions=positions,
                    mlm_targets=targets,
                    itm_label=itm_label,
                    ikm_label=ikm_realized,
                    iec_label=iec_realized,
                    source_image_id=rec.image_id,
                )
                example.validate(
                    max_text_tokens=assembly_cfg.max_text_tokens,
                    max_objects=assembly_cfg.max_objects,
                    special_ids=vocab.special_ids,
                    mask_id=vocab.mask_id,
                )
                examples.append(example)
                itm_counts[itm_label] += 1
                ikm_counts[ikm_realized] += 1
                iec_counts[iec_realized] += 1
                if collect_audits:
                    audits.append(audit_entry)
            except ValidationError as exc:
                failures.append(AssemblyFailure(rec.image_id, str(exc)))

    cfg_payload = {
        "assembly": assembly_cfg.to_json_dict(),
        "sampler": {
            "tau": sampler_cfg.tau,
            "ikm_candidate_count": sampler_cfg.ikm_candidate_count,
            "iec_sample_images": sampler_cfg.iec_sample_images,
            "top_k_objects": sampler_cfg.top_k_objects,
            "distance_metric": sampler_cfg.distance_metric,
        },
        "shards": shards,
    }
    visual_dim = examples[0].visual_features.shape[1] if examples else N_GEOMETRY
    manifest = CorpusManifest(
        seed=seed,
        config_hash=config_hash(cfg_payload),
        record_count=len(examples),
        visual_dim=int(visual_dim),
        max_text_tokens=assembly_cfg.max_text_tokens,
        max_objects=assembly_cfg.max_objects,
        mlm_rate=assembly_cfg.mlm_rate,
        itm_type_ratio=tuple(assembly_cfg.itm_type_ratio),
        ikm_type_ratio=tuple(assembly_cfg.ikm_type_ratio),
        iec_type_ratio=tuple(assembly_cfg.iec_type_ratio),
        itm_counts=tuple(itm_counts),
        ikm_counts=tuple(ikm_counts),
        iec_counts=tuple(iec_counts),
        mlm_masked_positions=masked_total,
        mlm_maskable_positions=maskable_total,
        vocab_tokens=list(vocab.tokens),
        shards=shards,
    )
    return AssemblyResult(examples=examples, manifest=manifest, failures=failures,
                          audits=audits)
