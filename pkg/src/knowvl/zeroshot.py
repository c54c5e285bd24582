"""Zero-shot image classification through the matching head.

For one item, every class composes a candidate input: the class name as
caption, the class knowledge as knowledge text, plus the item's own tags and
visual features. The score of a class is the matching head's probability of
the full-match label (0); the prediction is the argmax over classes, ties
going to the lowest class index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import AssemblyConfig, Vocabulary, build_input, effective_tags
from .errors import MissingField, ValidationError
from .formats import DetectedObject, ImageRecord, TrainingExample
from .model import ModelParams, batch_from_examples, forward, _softmax
from .training import read_metrics  # noqa: F401  (re-exported for CLI symmetry)


@dataclass
class ZeroShotTask:
    """Classification task: named classes with knowledge, gold-labeled items."""

    classes: list[tuple[str, str]]  # (name, knowledge)
    items: list[ImageRecord]
    gold: list[int]

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ValidationError("a zero-shot task needs at least 2 classes")
        if len(self.items) != len(self.gold):
            raise ValidationError("items and gold labels differ in length")
        for g in self.gold:
            if not 0 <= g < len(self.classes):
                raise ValidationError(f"gold class index {g} out of range")


def read_zero_shot_task(path: str | Path) -> ZeroShotTask:
    """Task file: one JSON object with ``classes`` ([{name, knowledge}]) and
    ``items`` ([{image_id, width, height, gold_class, objects: [...]}])."""
    d = json.loads(Path(path).read_text())
    for key in ("classes", "items"):
        if key not in d:
            raise MissingField(f"{path}: task file missing {key!r}")
    classes = []
    for c in d["classes"]:
        if "name" not in c or "knowledge" not in c:
            raise MissingField(f"{path}: class entry missing name/knowledge")
        classes.append((c["name"], c["knowledge"]))
    items, gold = [], []
    for i, item in enumerate(d["items"]):
        for key in ("image_id", "width", "height", "gold_class", "objects"):
            if key not in item:
                raise MissingField(f"{path}: item {i} missing {key!r}")
        objects = [
            DetectedObject(
                tag=o["tag"], bbox=tuple(o["bbox"]),
                feature=np.asarray(o["feature"], dtype=np.float64),
                score=o.get("score", 1.0),
            )
            for o in item["objects"]
        ]
        items.append(ImageRecord(
            image_id=item["image_id"], caption=item.get("caption", ""),
            width=item["width"], height=item["height"], objects=objects,
        ))
        gold.append(int(item["gold_class"]))
    return ZeroShotTask(classes=classes, items=items, gold=gold)


def write_zero_shot_task(path: str | Path, task: ZeroShotTask) -> None:
    payload = {
        "classes": [{"name": n, "knowledge": k} for n, k in task.classes],
        "items": [
            {
                "image_id": rec.image_id,
                "width": rec.width,
                "height": rec.height,
                "gold_class": g,
                "objects": [
                    {"tag": o.tag, "bbox": list(o.bbox), "score": o.score,
                     "feature": o.feature.tolist()}
                    for o in rec.objects
                ],
            }
            for rec, g in zip(task.items, task.gold)
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")))


@dataclass
class ZeroShotResult:
    predictions: list[int]
    scores: np.ndarray  # (n_items, n_classes) matching probabilities
    accuracy: float

    def to_json_dict(self) -> dict:
        return {
            "predictions": self.predictions,
            "scores": self.scores.tolist(),
            "accuracy": self.accuracy,
        }


def predict_from_scores(scores: np.ndarray) -> list[int]:
    """Argmax per row; exact ties resolve to the lowest class index."""
    return [int(np.argmax(row)) for row in scores]


def zero_shot_classify(
    params: ModelParams,
    task: ZeroShotTask,
    vocab: Vocabulary,
    assembly_cfg: AssemblyConfig | None = None,
) -> ZeroShotResult:
    """Score every (item, class) pair and report argmax predictions.

    No masking is applied at evaluation time; the matching head sees the
    uncorrupted composed input.
    """
    cfg = assembly_cfg if assembly_cfg is not None else AssemblyConfig()
    n_items, n_classes = len(task.items), len(task.classes)
    scores = np.zeros((n_items, n_classes))
    for i, rec in enumerate(task.items):
        candidates = []
        tags = effective_tags(rec, cfg.max_objects)
        for name, knowledge in task.classes:
            token_ids, segment_ids, visual = build_input(
                name, knowledge, tags, rec.objects, vocab, cfg,
                width=rec.width, height=rec.height,
            )
            candidates.append(TrainingExample(
                token_ids=token_ids, segment_ids=segment_ids,
                visual_features=visual, mlm_positions=[], mlm_targets=[],
                itm_label=0, ikm_label=0, iec_label=0,
                source_image_id=rec.image_id,
            ))
        batch = batch_from_examples(candidates, pad_id=vocab.pad_id)
        _, itm_logits, _, _ = forward(params, batch)
        scores[i] = _softmax(itm_logits)[:, 0]
    predictions = predict_from_scores(scores)
    correct = sum(1 for p, g in zip(predictions, task.gold) if p == g)
    accuracy = correct / n_items if n_items else 0.0
    return ZeroShotResult(predictions=predictions, scores=scores, accuracy=accuracy)
