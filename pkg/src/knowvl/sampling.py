"""Negative sampling, concept locating, and object replacement.

All samplers take an explicit seeded ``numpy.random.Generator`` and are
deterministic functions of (inputs, generator state). Each has an
``*_with_audit`` variant returning the full decision record (drawn candidate
sets, scores) that powers both the ``sample-audit`` CLI and the exhaustive
oracle checks in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import check_fraction, check_positive
from .embeddings import category_similarities, category_similarity
from .errors import (
    EmptyPool,
    IndexOutOfRange,
    NoDissimilarConcept,
    NoObjects,
    NoValidDonor,
    ValidationError,
)
from .formats import EmbeddingTable, ImageRecord, VisualConcept


@dataclass
class SamplerConfig:
    """Knobs of the sampling stage.

    ``tau`` separates relevant from irrelevant categories; candidates below
    it count as dissimilar. ``distance_metric`` picks how "visually closest"
    is measured for replacement donors (euclidean | cosine).
    """

    tau: float = 0.3
    ikm_candidate_count: int = 200
    iec_sample_images: int = 20
    top_k_objects: int = 10
    rng_seed: int = 0
    distance_metric: str = "euclidean"

    def __post_init__(self) -> None:
        check_fraction("tau", self.tau)
        check_positive("ikm_candidate_count", self.ikm_candidate_count)
        check_positive("iec_sample_images", self.iec_sample_images)
        check_positive("top_k_objects", self.top_k_objects)
        if self.distance_metric not in ("euclidean", "cosine"):
            raise ValidationError(
                f"distance_metric must be euclidean|cosine, got {self.distance_metric!r}"
            )


@dataclass(frozen=True)
class ReplacementRecord:
    """Outcome of donor selection for one object replacement."""

    target_object_index: int
    donor_image_id: str
    donor_object_index: int
    donor_tag: str
    visual_distance: float
    category_similarity: float


@dataclass
class SamplerAudit:
    """Decision trace of one sampler call, for auditing and oracle checks."""

    operation: str
    drawn: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    chosen: object = None

    def to_json_dict(self) -> dict:
        return {
            "operation": self.operation,
            "drawn": self.drawn,
            "scores": [float(s) for s in self.scores],
            "chosen": self.chosen,
        }


def _ikm_pool(p_v: VisualConcept, pool: list[VisualConcept]) -> list[int]:
    """Indices of usable candidates: the target concept and anything sharing
    its name would corrupt labels if drawn as a negative."""
    name = p_v.name.lower()
    return [i for i, c in enumerate(pool) if c.name.lower() != name]


def select_type3_knowledge_with_audit(
    p_v: VisualConcept,
    pool: list[VisualConcept],
    table: EmbeddingTable,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[VisualConcept, SamplerAudit]:
    """Hardest mismatched knowledge: among a random candidate draw, the
    concept whose category is most similar to the target's.

    Draws ``min(ikm_candidate_count, pool)`` candidates uniformly without
    replacement, then takes the argmax of category cosine similarity; ties
    go to the lowest draw index.
    """
    usable = _ikm_pool(p_v, pool)
    if not usable:
        raise EmptyPool(f"no candidates besides {p_v.name!r} itself")
    size = min(cfg.ikm_candidate_count, len(usable))
    draw = rng.choice(len(usable), size=size, replace=False)
    drawn = [usable[int(i)] for i in draw]
    sims = category_similarities(p_v.category,
                                 [pool[i].category for i in drawn], table)
    best = int(np.argmax(sims))
    audit = SamplerAudit(
        operation="select_type3_knowledge",
        drawn=drawn,
        scores=list(sims),
        chosen=drawn[best],
    )
    return pool[drawn[best]], audit


def select_type3_knowledge(p_v, pool, table, cfg, rng) -> VisualConcept:
    return select_type3_knowledge_with_audit(p_v, pool, table, cfg, rng)[0]


def select_type2_knowledge_with_audit(
    p_v: VisualConcept,
    pool: list[VisualConcept],
    table: EmbeddingTable,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[VisualConcept, SamplerAudit]:
    """Irrelevant knowledge: a uniform draw over pool members whose category
    similarity to the target falls below tau."""
    usable = _ikm_pool(p_v, pool)
    if not usable:
        raise EmptyPool(f"no candidates besides {p_v.name!r} itself")
    sims = category_similarities(p_v.category,
                                 [pool[i].category for i in usable], table)
    retained = [usable[i] for i in range(len(usable)) if sims[i] < cfg.tau]
    if not retained:
        raise NoDissimilarConcept(
            f"every candidate category is within tau={cfg.tau} of "
            f"{p_v.category!r}"
        )
    pick = retained[int(rng.integers(len(retained)))]
    audit = SamplerAudit(
        operation="select_type2_knowledge",
        drawn=retained,
        scores=[float(sims[usable.index(pick)])],
        chosen=pick,
    )
    return pool[pick], audit


def select_type2_knowledge(p_v, pool, table, cfg, rng) -> VisualConcept:
    return select_type2_knowledge_with_audit(p_v, pool, table, cfg, rng)[0]


def top_objects_by_area(record: ImageRecord, k: int) -> list[int]:
    """Indices of the k largest objects, area descending, ties by lower index."""
    order = sorted(range(len(record.objects)),
                   key=lambda i: (-record.objects[i].area, i))
    return order[:k]


def locate_concept_with_audit(
    record: ImageRecord,
    concept: VisualConcept,
    table: EmbeddingTable,
    cfg: SamplerConfig,
) -> tuple[int, SamplerAudit]:
    """Find the detected object corresponding to the record's concept.

    Only the top ``top_k_objects`` by pixel area are considered; among them
    the object whose tag is most similar to the concept's category wins and
    has its tag overridden with the concept name.
    """
    if not record.objects:
        raise NoObjects(f"record {record.image_id!r} has no detected objects")
    candidates = top_objects_by_area(record, cfg.top_k_objects)
    sims = category_similarities(
        concept.category, [record.objects[i].tag for i in candidates], table
    )
    winner = candidates[int(np.argmax(sims))]
    record.objects[winner].concept_override = concept.name
    audit = SamplerAudit(
        operation="locate_concept",
        drawn=candidates,
        scores=list(sims),
        chosen=winner,
    )
    return winner, audit


def locate_concept(record, concept, table, cfg) -> int:
    return locate_concept_with_audit(record, concept, table, cfg)[0]


def propagate_concept(record: ImageRecord, located_index: int) -> int:
    """Copy the located object's override to every object sharing its
    original detector tag. Returns how many objects now carry the override."""
    if not 0 <= located_index < len(record.objects):
        raise IndexOutOfRange(f"located index {located_index} out of range")
    located = record.objects[located_index]
    if located.concept_override is None:
        raise ValidationError("locate_concept must run before propagation")
    count = 0
    for obj in record.objects:
        if obj.tag == located.tag:
            obj.concept_override = located.concept_override
            count += 1
    return count


def _visual_distance(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    if metric == "euclidean":
        return float(np.linalg.norm(a - b))
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 1.0
    return 1.0 - float(np.dot(a, b) / (na * nb))


def select_iec_replacement_with_audit(
    record: ImageRecord,
    located_index: int,
    corpus_images: list[ImageRecord],
    concept: VisualConcept,
    table: EmbeddingTable,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[ReplacementRecord, SamplerAudit]:
    """Pick the replacement donor for an edited-image negative.

    Randomly draws ``iec_sample_images`` other images, pools all their
    detected objects, keeps those whose tag is category-dissimilar (< tau)
    to the record's concept, and returns the donor whose visual feature is
    closest to the located object's.
    """
    if not 0 <= located_index < len(record.objects):
        raise IndexOutOfRange(f"located index {located_index} out of range")
    others = [img for img in corpus_images if img.image_id != record.image_id]
    if not others:
        raise NoValidDonor("no other images to draw donors from")
    size = min(cfg.iec_sample_images, len(others))
    draw = rng.choice(len(others), size=size, replace=False)
    drawn_images = [others[int(i)] for i in draw]

    target_feature = record.objects[located_index].feature
    donors: list[tuple[str, int, str, float, float]] = []
    for img in drawn_images:
        if not img.objects:
            continue
        sims = category_similarities(concept.category,
                                     [o.tag for o in img.objects], table)
        for j, obj in enumerate(img.objects):
            if sims[j] >= cfg.tau:
                continue
            if obj.feature.shape != target_feature.shape:
                continue
            dist = _visual_distance(obj.feature, target_feature, cfg.distance_metric)
            donors.append((img.image_id, j, obj.tag, dist, float(sims[j])))
    if not donors:
        raise NoValidDonor(
            f"all donor objects in the {size} sampled images are category-similar "
            f"to {concept.category!r}"
        )
    best = min(range(len(donors)), key=lambda i: donors[i][3])
    image_id, obj_index, tag, dist, sim = donors[best]
    rep = ReplacementRecord(
        target_object_index=located_index,
        donor_image_id=image_id,
        donor_object_index=obj_index,
        donor_tag=tag,
        visual_distance=dist,
        category_similarity=sim,
    )
    audit = SamplerAudit(
        operation="select_iec_replacement",
        drawn=[img.image_id for img in drawn_images],
        scores=[d[3] for d in donors],
        chosen=(image_id, obj_index),
    )
    return rep, audit


def select_iec_replacement(record, located_index, corpus_images, concept, table,
                           cfg, rng) -> ReplacementRecord:
    return select_iec_replacement_with_audit(
        record, located_index, corpus_images, concept, table, cfg, rng
    )[0]


def apply_replacement(
    record: ImageRecord,
    rep: ReplacementRecord,
    donors: dict[str, ImageRecord],
) -> ImageRecord:
    """New record whose target object carries the donor's feature vector.

    Only the feature changes; tags, boxes, and every other object stay
    untouched, so applying the same replacement twice is a no-op.
    """
    if not 0 <= rep.target_object_index < len(record.objects):
        raise IndexOutOfRange(f"target index {rep.target_object_index} out of range")
    donor_image = donors.get(rep.donor_image_id)
    if donor_image is None:
        raise IndexOutOfRange(f"donor image {rep.donor_image_id!r} unknown")
    if not 0 <= rep.donor_object_index < len(donor_image.objects):
        raise IndexOutOfRange(
            f"donor object {rep.donor_object_index} out of range for "
            f"{rep.donor_image_id!r}"
        )
    donor_obj = donor_image.objects[rep.donor_object_index]
    target = record.objects[rep.target_object_index]
    if donor_obj.feature.shape != target.feature.shape:
        raise ValidationError("donor feature dimension does not match target")
    out = record.copy()
    out.objects[rep.target_object_index].feature = donor_obj.feature.copy()
    return out
