"""Training loop: adaptive-moment optimizer, linear-decay schedule, metrics.

Runs are deterministic functions of (corpus, configs, seed): parameter init,
epoch shuffling, and any dropout noise all derive from one seeded generator,
and the metrics log is written with canonical JSON so reruns are
byte-identical.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .base import check_positive, check_seed
from .errors import CorpusManifestMismatch, NonFiniteLoss, ValidationError
from .formats import CorpusManifest, TrainingExample, read_corpus
from .model import (
    Batch,
    LossBreakdown,
    ModelConfig,
    ModelParams,
    batch_from_examples,
    init_params,
    loss_and_grads,
    save_checkpoint,
)

# Reference scale from the source pre-training setup; desk runs shrink both.
FULL_SCALE_BATCH_SIZE = 720
FULL_SCALE_MAX_STEPS = 1_000_000


@dataclass
class TrainRunConfig:
    corpus_path: str | Path | None = None
    batch_size: int = 8
    max_steps: int = 2000
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    checkpoint_interval: int = 500
    output_dir: str | Path = "run"

    def __post_init__(self) -> None:
        check_positive("batch_size", self.batch_size)
        check_positive("max_steps", self.max_steps)
        check_positive("learning_rate", self.learning_rate)
        check_positive("checkpoint_interval", self.checkpoint_interval)
        check_seed(self.seed)

    def to_json_dict(self) -> dict:
        return {
            "batch_size": self.batch_size, "max_steps": self.max_steps,
            "learning_rate": self.learning_rate, "weight_decay": self.weight_decay,
            "beta1": self.beta1, "beta2": self.beta2, "adam_eps": self.adam_eps,
            "seed": self.seed, "checkpoint_interval": self.checkpoint_interval,
        }


def linear_decay_lr(base_lr: float, step: int, max_steps: int) -> float:
    """lr(t) = lr0 * (1 - t / max_steps); full rate at t=0, half at the
    midpoint."""
    return base_lr * (1.0 - step / max_steps)


class AdamOptimizer:
    """Adaptive moments with bias correction and decoupled weight decay.

    Decay skips biases and normalization gains/offsets (block names ending
    in ``_b*`` or ``_g``).
    """

    def __init__(self, params: ModelParams, cfg: TrainRunConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    @staticmethod
    def decays(name: str) -> bool:
        return not name.endswith(("_b", "_bq", "_bk", "_bv", "_bo", "_b1", "_b2", "_g"))

    def step(self, params: ModelParams, grads: dict[str, np.ndarray], lr: float) -> None:
        cfg = self.cfg
        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for name, p in params.tensors.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m += (1.0 - cfg.beta1) * (g - m)
            v += (1.0 - cfg.beta2) * (g * g - v)
            update = (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
            if cfg.weight_decay and self.decays(name):
                update = update + cfg.weight_decay * p
            p -= lr * update


def train_step(params: ModelParams, optimizer: AdamOptimizer, batch: Batch,
               step: int, run_cfg: TrainRunConfig,
               rng: np.random.Generator | None = None) -> tuple[LossBreakdown, float]:
    """One forward/backward/update; aborts on non-finite loss."""
    if step >= run_cfg.max_steps:
        raise ValidationError(f"step {step} >= max_steps {run_cfg.max_steps}")
    if params.config.dropout > 0 and rng is None:
        raise ValidationError("training with dropout needs the run generator")
    breakdown, grads = loss_and_grads(params, batch, rng)
    if not math.isfinite(breakdown.total):
        raise NonFiniteLoss(
            f"non-finite loss at step {step}: mlm={breakdown.l_mlm} "
            f"itm={breakdown.l_itm} ikm={breakdown.l_ikm} iec={breakdown.l_iec}"
        )
    lr = linear_decay_lr(run_cfg.learning_rate, step, run_cfg.max_steps)
    optimizer.step(params, grads, lr)
    return breakdown, lr


@dataclass
class TrainResult:
    params: ModelParams
    metrics_path: Path
    checkpoint_path: Path
    run_meta_path: Path
    final_loss: LossBreakdown
    wall_seconds: float
    steps: int


def _check_manifest(manifest: CorpusManifest, examples: Sequence[TrainingExample]) -> None:
    if manifest.record_count != len(examples):
        raise CorpusManifestMismatch(
            f"manifest record_count {manifest.record_count} != {len(examples)}"
        )
    counts = [0, 0, 0]
    for ex in examples:
        counts[ex.ikm_label] += 1
        if ex.visual_features.shape[1] != manifest.visual_dim:
            raise CorpusManifestMismatch(
                f"example visual width {ex.visual_features.shape[1]} != manifest "
                f"visual_dim {manifest.visual_dim}"
            )
    if tuple(counts) != tuple(manifest.ikm_counts):
        raise CorpusManifestMismatch(
            f"ikm label counts {tuple(counts)} != manifest {tuple(manifest.ikm_counts)}"
        )


def model_config_for_corpus(manifest: CorpusManifest, *,
                            hidden: int = 64, layers: int = 2, heads: int = 4,
                            ffn: int = 256, dropout: float = 0.0,
                            dtype: str = "float32") -> ModelConfig:
    max_positions = manifest.max_text_tokens + manifest.max_objects
    return ModelConfig(
        hidden=hidden, layers=layers, heads=heads, ffn=ffn,
        vocab_size=len(manifest.vocab_tokens), visual_in=manifest.visual_dim,
        max_positions=max_positions, dropout=dropout, dtype=dtype,
    )


def train(run_cfg: TrainRunConfig, model_cfg: ModelConfig | None = None, *,
          corpus: tuple[CorpusManifest, list[TrainingExample]] | None = None,
          quiet: bool = True) -> TrainResult:
    """Pre-train on a corpus file (or an already loaded corpus).

    Writes ``metrics.jsonl`` (one record per step), ``run_meta.json``, any
    interval checkpoints, and ``final.ckpt`` under ``output_dir``.
    """
    if corpus is None:
        if run_cfg.corpus_path is None:
            raise ValidationError("either corpus_path or a loaded corpus is required")
        corpus = read_corpus(run_cfg.corpus_path)
    manifest, examples = corpus
    _check_manifest(manifest, examples)
    if run_cfg.batch_size > len(examples):
        raise ValidationError(
            f"batch_size {run_cfg.batch_size} exceeds corpus size {len(examples)}"
        )
    if model_cfg is None:
        model_cfg = model_config_for_corpus(manifest)
    if model_cfg.vocab_size != len(manifest.vocab_tokens):
        raise CorpusManifestMismatch(
            f"model vocab_size {model_cfg.vocab_size} != manifest vocabulary "
            f"{len(manifest.vocab_tokens)}"
        )

    out_dir = Path(run_cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.jsonl"
    run_meta_path = out_dir / "run_meta.json"
    checkpoint_path = out_dir / "final.ckpt"

    rng = np.random.default_rng(run_cfg.seed)
    params = init_params(model_cfg, rng)
    optimizer = AdamOptimizer(params, run_cfg)
    dropout_rng = rng if model_cfg.dropout > 0 else None

    extras = {
        "vocab_tokens": manifest.vocab_tokens,
        "assembly": {
            "max_text_tokens": manifest.max_text_tokens,
            "max_objects": manifest.max_objects,
            "visual_dim": manifest.visual_dim,
        },
        "corpus_config_hash": manifest.config_hash,
        "seed": run_cfg.seed,
    }

    start = time.perf_counter()
    step = 0
    order: list[int] = []
    final_loss: LossBreakdown | None = None
    with open(metrics_path, "w", encoding="utf-8") as metrics:
        while step < run_cfg.max_steps:
            if not order:
                order = list(rng.permutation(len(examples)))
            take = order[: run_cfg.batch_size]
            order = order[run_cfg.batch_size:]
            batch = batch_from_examples([examples[i] for i in take])
            breakdown, lr = train_step(params, optimizer, batch, step, run_cfg,
                                       dropout_rng)
            record = {"step": step, "lr": lr}
            record.update(breakdown.to_json_dict())
            metrics.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            metrics.write("\n")
            final_loss = breakdown
            step += 1
            if step % run_cfg.checkpoint_interval == 0 and step < run_cfg.max_steps:
                save_checkpoint(out_dir / f"step{step}.ckpt", params, extras=extras)
            if not quiet and step % 100 == 0:
                print(f"step {step}: total={breakdown.total:.4f} lr={lr:.2e}")
    wall = time.perf_counter() - start

    save_checkpoint(checkpoint_path, params, extras=extras)
    run_meta = {
        "run_config": run_cfg.to_json_dict(),
        "model_config": model_cfg.to_json_dict(),
        "corpus": {
            "config_hash": manifest.config_hash,
            "seed": manifest.seed,
            "record_count": manifest.record_count,
            "itm_counts": list(manifest.itm_counts),
            "ikm_counts": list(manifest.ikm_counts),
            "iec_counts": list(manifest.iec_counts),
            "mlm_masked_positions": manifest.mlm_masked_positions,
            "mlm_maskable_positions": manifest.mlm_maskable_positions,
        },
        "wall_seconds": wall,
        "final_loss": final_loss.to_json_dict() if final_loss else None,
    }
    run_meta_path.write_text(json.dumps(run_meta, indent=2, sort_keys=True))
    assert final_loss is not None
    return TrainResult(
        params=params, metrics_path=metrics_path, checkpoint_path=checkpoint_path,
        run_meta_path=run_meta_path, final_loss=final_loss, wall_seconds=wall,
        steps=step,
    )


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

@dataclass
class ReportSummary:
    steps: int
    component_means: dict[str, float]
    final: dict[str, float]
    table: str
    curves_path: Path | None = None
    ratios: dict | None = None
    accuracy: float | None = None


def read_metrics(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    if not records:
        raise ValidationError(f"{path}: metrics log is empty")
    return records


def report(metrics_path: str | Path, *, run_meta_path: str | Path | None = None,
           eval_path: str | Path | None = None,
           out_dir: str | Path | None = None) -> ReportSummary:
    """Summarize a metrics log into a text table plus plot-ready CSV."""
    records = read_metrics(metrics_path)
    components = ["l_mlm", "l_itm", "l_ikm", "l_iec", "total"]
    means = {c: float(np.mean([r[c] for r in records])) for c in components}
    final = {c: float(records[-1][c]) for c in components}

    ratios = None
    if run_meta_path is not None:
        meta = json.loads(Path(run_meta_path).read_text())
        corpus = meta.get("corpus", {})
        n = max(corpus.get("record_count", 0), 1)
        ratios = {
            "itm": [c / n for c in corpus.get("itm_counts", [])],
            "ikm": [c / n for c in corpus.get("ikm_counts", [])],
            "iec": [c / n for c in corpus.get("iec_counts", [])],
        }
        maskable = corpus.get("mlm_maskable_positions", 0)
        if maskable:
            ratios["mlm_masked_fraction"] = corpus["mlm_masked_positions"] / maskable

    accuracy = None
    if eval_path is not None:
        accuracy = json.loads(Path(eval_path).read_text()).get("accuracy")

    lines = [f"{'component':<10} {'mean':>12} {'final':>12}"]
    for c in components:
        lines.append(f"{c:<10} {means[c]:>12.6f} {final[c]:>12.6f}")
    if ratios:
        lines.append(f"realized ratios: {json.dumps(ratios, sort_keys=True)}")
    if accuracy is not None:
        lines.append(f"zero-shot accuracy: {accuracy:.4f}")
    table = "\n".join(lines)

    curves_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        curves_path = out / "loss_curves.csv"
        with open(curves_path, "w", encoding="utf-8") as fh:
            fh.write("step,lr,l_mlm,l_itm,l_ikm,l_iec,total\n")
            for r in records:
                fh.write(f"{r['step']},{r['lr']!r},{r['l_mlm']!r},{r['l_itm']!r},"
                         f"{r['l_ikm']!r},{r['l_iec']!r},{r['total']!r}\n")
        (out / "report.txt").write_text(table + "\n")

    return ReportSummary(
        steps=len(records), component_means=means, final=final, table=table,
        curves_path=curves_path, ratios=ratios, accuracy=accuracy,
    )
