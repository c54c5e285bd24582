"""Desk-scale transformer encoder over joint text+visual inputs.

Text tokens are embedded (token + position + segment), visual rows are
projected to the hidden size and concatenated after the text block, and a
standard multi-head self-attention encoder runs over the whole sequence.
Four linear heads produce the objective logits: the masked-language head
reads the encoder outputs at the masked positions, the three classification
heads read the first ([CLS]) position.

Everything is plain numpy with hand-written reverse-mode gradients, which
keeps runs bitwise deterministic and lets the finite-difference checker and
double-precision mode work without framework tricks.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ShapeMismatch, ValidationError
from .formats import TrainingExample

ATTENTION_MASK_BIAS = -1e9
LN_EPS = 1e-5
N_SEGMENTS = 4

CHECKPOINT_MAGIC = b"KNVLCKPT"
CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    hidden: int = 64
    layers: int = 2
    heads: int = 4
    ffn: int = 256
    vocab_size: int = 128
    visual_in: int = 14  # region feature width + 6 geometry values
    max_positions: int = 128
    dropout: float = 0.0  # checks and desk runs; real pre-training uses 0.1
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.hidden % self.heads != 0:
            raise ValidationError(
                f"hidden ({self.hidden}) must be divisible by heads ({self.heads})"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.dtype not in ("float32", "float64"):
            raise ValidationError(f"dtype must be float32|float64, got {self.dtype!r}")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    def to_json_dict(self) -> dict:
        return {
            "hidden": self.hidden, "layers": self.layers, "heads": self.heads,
            "ffn": self.ffn, "vocab_size": self.vocab_size,
            "visual_in": self.visual_in, "max_positions": self.max_positions,
            "dropout": self.dropout, "dtype": self.dtype,
        }


class ModelParams:
    """Named parameter blocks in a stable order."""

    def __init__(self, config: ModelConfig, tensors: dict[str, np.ndarray]):
        self.config = config
        self.tensors = tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        self.tensors[name] = value

    def names(self) -> list[str]:
        return list(self.tensors)

    def astype(self, dtype: str) -> "ModelParams":
        cfg = ModelConfig(**{**self.config.to_json_dict(), "dtype": dtype})
        return ModelParams(cfg, {k: v.astype(cfg.np_dtype) for k, v in self.tensors.items()})

    def check_finite(self) -> None:
        for name, t in self.tensors.items():
            if not np.all(np.isfinite(t)):
                raise ValidationError(f"parameter block {name!r} contains non-finite values")


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    h, f, v = config.hidden, config.ffn, config.vocab_size
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (v, h),
        "pos_emb": (config.max_positions, h),
        # Visual rows carry their own position table (rank by area), so an
        # example's visual encoding never depends on batch text padding.
        "vis_pos_emb": (config.max_positions, h),
        "seg_emb": (N_SEGMENTS, h),
        "emb_ln_g": (h,), "emb_ln_b": (h,),
        "vis_proj_w": (config.visual_in, h), "vis_proj_b": (h,),
    }
    for l in range(config.layers):
        p = f"l{l}_"
        shapes.update({
            p + "attn_wq": (h, h), p + "attn_bq": (h,),
            p + "attn_wk": (h, h), p + "attn_bk": (h,),
            p + "attn_wv": (h, h), p + "attn_bv": (h,),
            p + "attn_wo": (h, h), p + "attn_bo": (h,),
            p + "ln1_g": (h,), p + "ln1_b": (h,),
            p + "ffn_w1": (h, f), p + "ffn_b1": (f,),
            p + "ffn_w2": (f, h), p + "ffn_b2": (h,),
            p + "ln2_g": (h,), p + "ln2_b": (h,),
        })
    shapes.update({
        "mlm_w": (h, v), "mlm_b": (v,),
        "itm_w": (h, 3), "itm_b": (3,),
        "ikm_w": (h, 3), "ikm_b": (3,),
        "iec_w": (h, 2), "iec_b": (2,),
    })
    return shapes


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Symmetric uniform init scaled by fan-in; biases and LN offsets zero,
    LN gains one."""
    dt = config.np_dtype
    tensors: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith("_g"):
            tensors[name] = np.ones(shape, dtype=dt)
        elif name.endswith(("_b", "_bq", "_bk", "_bv", "_bo", "_b1", "_b2")):
            tensors[name] = np.zeros(shape, dtype=dt)
        else:
            fan_in = shape[0] if len(shape) > 1 else config.hidden
            bound = 1.0 / math.sqrt(fan_in)
            tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dt)
    return ModelParams(config, tensors)


def zero_params(config: ModelConfig) -> ModelParams:
    dt = config.np_dtype
    return ModelParams(config, {
        name: np.zeros(shape, dtype=dt)
        for name, shape in parameter_shapes(config).items()
    })


# ---------------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------------

@dataclass
class Batch:
    """Padded tensors for a batch of training examples.

    ``mlm_rows``/``mlm_cols`` flatten all masked positions of the batch;
    objective labels use -1 where an example carries no label for that head.
    """

    token_ids: np.ndarray      # (B, T) int
    segment_ids: np.ndarray    # (B, T) int
    text_mask: np.ndarray      # (B, T) bool
    visual: np.ndarray         # (B, N, visual_in) float
    visual_mask: np.ndarray    # (B, N) bool
    mlm_rows: np.ndarray       # (M,) int
    mlm_cols: np.ndarray       # (M,) int
    mlm_targets: np.ndarray    # (M,) int
    itm_labels: np.ndarray     # (B,) int
    ikm_labels: np.ndarray     # (B,) int
    iec_labels: np.ndarray     # (B,) int

    @property
    def size(self) -> int:
        return self.token_ids.shape[0]


def batch_from_examples(examples: Sequence[TrainingExample], *,
                        pad_id: int = 0) -> Batch:
    if not examples:
        raise ValidationError("cannot build a batch from zero examples")
    bsz = len(examples)
    t_max = max(len(ex.token_ids) for ex in examples)
    n_max = max(ex.visual_features.shape[0] for ex in examples)
    visual_in = examples[0].visual_features.shape[1]

    token_ids = np.full((bsz, t_max), pad_id, dtype=np.int64)
    segment_ids = np.zeros((bsz, t_max), dtype=np.int64)
    text_mask = np.zeros((bsz, t_max), dtype=bool)
    visual = np.zeros((bsz, n_max, visual_in), dtype=np.float64)
    visual_mask = np.zeros((bsz, n_max), dtype=bool)
    rows, cols, targets = [], [], []
    itm = np.zeros(bsz, dtype=np.int64)
    ikm = np.zeros(bsz, dtype=np.int64)
    iec = np.zeros(bsz, dtype=np.int64)

    for b, ex in enumerate(examples):
        if ex.visual_features.shape[1] != visual_in:
            raise ShapeMismatch("visual feature widths differ within the batch")
        t = len(ex.token_ids)
        token_ids[b, :t] = ex.token_ids
        segment_ids[b, :t] = ex.segment_ids
        text_mask[b, :t] = True
        n = ex.visual_features.shape[0]
        if n:
            visual[b, :n] = ex.visual_features
            visual_mask[b, :n] = True
        rows.extend([b] * len(ex.mlm_positions))
        cols.extend(ex.mlm_positions)
        targets.extend(ex.mlm_targets)
        itm[b], ikm[b], iec[b] = ex.itm_label, ex.ikm_label, ex.iec_label

    return Batch(
        token_ids=token_ids, segment_ids=segment_ids, text_mask=text_mask,
        visual=visual, visual_mask=visual_mask,
        mlm_rows=np.asarray(rows, dtype=np.int64),
        mlm_cols=np.asarray(cols, dtype=np.int64),
        mlm_targets=np.asarray(targets, dtype=np.int64),
        itm_labels=itm, ikm_labels=ikm, iec_labels=iec,
    )


@dataclass
class LossBreakdown:
    l_mlm: float
    l_itm: float
    l_ikm: float
    l_iec: float
    total: float = field(init=False)

    def __post_init__(self) -> None:
        # Fixed accumulation order so total always equals the component sum
        # bit for bit.
        self.total = self.l_mlm + self.l_itm + self.l_ikm + self.l_iec

    def to_json_dict(self) -> dict:
        return {"l_mlm": self.l_mlm, "l_itm": self.l_itm, "l_ikm": self.l_ikm,
                "l_iec": self.l_iec, "total": self.total}


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def _gelu(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x2 = x * x
    u = _GELU_C * (x + _GELU_A * x2 * x)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(x: np.ndarray, t: np.ndarray, dy: np.ndarray) -> np.ndarray:
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = centered * inv_std
    return xhat * g + b, (xhat, inv_std)


def _layer_norm_backward(dy, cache, g):
    xhat, inv_std = cache
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv_std * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _dropout_mask(shape, p: float, rng: np.random.Generator | None, dtype):
    # No generator means inference mode: dropout off regardless of config.
    if p == 0.0 or rng is None:
        return None
    return (rng.random(shape) >= p).astype(dtype) / (1.0 - p)


# ---------------------------------------------------------------------------
# Forward / loss / backward
# ---------------------------------------------------------------------------

def _validate_batch(config: ModelConfig, batch: Batch) -> None:
    bsz, t = batch.token_ids.shape
    if batch.segment_ids.shape != (bsz, t) or batch.text_mask.shape != (bsz, t):
        raise ShapeMismatch("token/segment/mask shapes disagree")
    if batch.visual.ndim != 3 or batch.visual.shape[0] != bsz:
        raise ShapeMismatch("visual tensor must be (batch, objects, features)")
    if batch.visual.shape[2] != config.visual_in:
        raise ShapeMismatch(
            f"visual width {batch.visual.shape[2]} != configured {config.visual_in}"
        )
    if t > config.max_positions or batch.visual.shape[1] > config.max_positions:
        raise ShapeMismatch(
            f"text length {t} or object count {batch.visual.shape[1]} exceeds "
            f"max_positions={config.max_positions}"
        )
    if batch.token_ids.max(initial=0) >= config.vocab_size:
        raise ShapeMismatch("token id outside the configured vocabulary")
    if batch.segment_ids.max(initial=0) >= N_SEGMENTS:
        raise ShapeMismatch("segment id outside the segment vocabulary")


def _encode(params: ModelParams, batch: Batch,
            rng: np.random.Generator | None = None):
    """Run the encoder; returns final hidden states and the backward cache."""
    cfg = params.config
    _validate_batch(cfg, batch)
    dt = cfg.np_dtype
    p = cfg.dropout

    bsz, t_len = batch.token_ids.shape
    n_vis = batch.visual.shape[1]
    seq_len = t_len + n_vis

    tok = params["tok_emb"][batch.token_ids]
    pos_text = params["pos_emb"][:t_len]
    seg = params["seg_emb"][batch.segment_ids]
    x_text = tok + pos_text[None, :, :] + seg

    visual = batch.visual.astype(dt)
    x_vis = visual @ params["vis_proj_w"] + params["vis_proj_b"]
    x_vis = x_vis + params["vis_pos_emb"][:n_vis][None, :, :]
    x_vis = x_vis + params["seg_emb"][3]

    x = np.concatenate([x_text, x_vis], axis=1)
    x, emb_ln_cache = _layer_norm(x, params["emb_ln_g"], params["emb_ln_b"])
    emb_drop = _dropout_mask(x.shape, p, rng, dt)
    if emb_drop is not None:
        x = x * emb_drop

    attn_mask = np.concatenate([batch.text_mask, batch.visual_mask], axis=1)
    key_bias = np.where(attn_mask, 0.0, ATTENTION_MASK_BIAS).astype(dt)
    key_bias = key_bias[:, None, None, :]  # (B, 1, 1, L)

    nh, dh = cfg.heads, cfg.head_dim
    scale = 1.0 / math.sqrt(dh)
    layer_caches = []
    for l in range(cfg.layers):
        pre = f"l{l}_"
        x_in = x
        q = x @ params[pre + "attn_wq"] + params[pre + "attn_bq"]
        k = x @ params[pre + "attn_wk"] + params[pre + "attn_bk"]
        v = x @ params[pre + "attn_wv"] + params[pre + "attn_bv"]
        q = q.reshape(bsz, seq_len, nh, dh).transpose(0, 2, 1, 3)
        k = k.reshape(bsz, seq_len, nh, dh).transpose(0, 2, 1, 3)
        v = v.reshape(bsz, seq_len, nh, dh).transpose(0, 2, 1, 3)
        scores = q @ k.transpose(0, 1, 3, 2) * scale + key_bias
        attn = _softmax(scores)
        attn_drop = _dropout_mask(attn.shape, p, rng, dt)
        attn_used = attn if attn_drop is None else attn * attn_drop
        ctx = (attn_used @ v).transpose(0, 2, 1, 3).reshape(bsz, seq_len, cfg.hidden)
        attn_out = ctx @ params[pre + "attn_wo"] + params[pre + "attn_bo"]
        out_drop = _dropout_mask(attn_out.shape, p, rng, dt)
        if out_drop is not None:
            attn_out = attn_out * out_drop
        x1, ln1_cache = _layer_norm(x_in + attn_out, params[pre + "ln1_g"],
                                    params[pre + "ln1_b"])
        ffn_pre = x1 @ params[pre + "ffn_w1"] + params[pre + "ffn_b1"]
        ffn_act, tanh_cache = _gelu(ffn_pre)
        ffn_out = ffn_act @ params[pre + "ffn_w2"] + params[pre + "ffn_b2"]
        ffn_drop = _dropout_mask(ffn_out.shape, p, rng, dt)
        if ffn_drop is not None:
            ffn_out = ffn_out * ffn_drop
        x, ln2_cache = _layer_norm(x1 + ffn_out, params[pre + "ln2_g"],
                                   params[pre + "ln2_b"])
        layer_caches.append({
            "x_in": x_in, "q": q, "k": k, "v": v, "attn": attn,
            "attn_drop": attn_drop, "ctx": ctx, "out_drop": out_drop,
            "ln1": ln1_cache, "x1": x1, "ffn_pre": ffn_pre,
            "tanh": tanh_cache, "ffn_act": ffn_act, "ffn_drop": ffn_drop,
            "ln2": ln2_cache,
        })

    cache = {
        "t_len": t_len, "n_vis": n_vis, "visual": visual,
        "emb_ln": emb_ln_cache, "emb_drop": emb_drop,
        "key_bias": key_bias, "layers": layer_caches, "hidden": x,
        "scale": scale,
    }
    return x, cache


def forward(params: ModelParams, batch: Batch,
            rng: np.random.Generator | None = None):
    """Logits of the four heads: MLM rows at the masked positions, the three
    classification heads at [CLS]."""
    hidden, _ = _encode(params, batch, rng)
    cls = hidden[:, 0, :]
    mlm_h = hidden[batch.mlm_rows, batch.mlm_cols]
    mlm_logits = mlm_h @ params["mlm_w"] + params["mlm_b"]
    itm_logits = cls @ params["itm_w"] + params["itm_b"]
    ikm_logits = cls @ params["ikm_w"] + params["ikm_b"]
    iec_logits = cls @ params["iec_w"] + params["iec_b"]
    return mlm_logits, itm_logits, ikm_logits, iec_logits


def _ce_mean(logits: np.ndarray, labels: np.ndarray):
    """Mean NLL over labeled rows; returns (loss, dlogits, n_labeled).

    Rows with label -1 contribute nothing and get zero gradient.
    """
    valid = labels >= 0
    n = int(valid.sum())
    probs = _softmax(logits)
    if n == 0:
        return 0.0, np.zeros_like(logits), 0
    idx = np.nonzero(valid)[0]
    picked = probs[idx, labels[idx]]
    loss = float(-np.log(np.clip(picked, 1e-300, None)).sum() / n)
    dlogits = np.zeros_like(logits)
    dlogits[idx] = probs[idx]
    dlogits[idx, labels[idx]] -= 1.0
    dlogits /= n
    return loss, dlogits, n


def loss_and_grads(params: ModelParams, batch: Batch,
                   rng: np.random.Generator | None = None):
    """Total-loss breakdown and exact gradients for every parameter block."""
    cfg = params.config
    hidden, cache = _encode(params, batch, rng)
    bsz, seq_len, h = hidden.shape
    cls = hidden[:, 0, :]
    mlm_h = hidden[batch.mlm_rows, batch.mlm_cols]

    mlm_logits = mlm_h @ params["mlm_w"] + params["mlm_b"]
    itm_logits = cls @ params["itm_w"] + params["itm_b"]
    ikm_logits = cls @ params["ikm_w"] + params["ikm_b"]
    iec_logits = cls @ params["iec_w"] + params["iec_b"]

    if batch.mlm_targets.size:
        l_mlm, d_mlm_logits, _ = _ce_mean(mlm_logits, batch.mlm_targets)
    else:
        l_mlm, d_mlm_logits = 0.0, np.zeros_like(mlm_logits)
    l_itm, d_itm_logits, _ = _ce_mean(itm_logits, batch.itm_labels)
    l_ikm, d_ikm_logits, _ = _ce_mean(ikm_logits, batch.ikm_labels)
    l_iec, d_iec_logits, _ = _ce_mean(iec_logits, batch.iec_labels)
    breakdown = LossBreakdown(l_mlm=l_mlm, l_itm=l_itm, l_ikm=l_ikm, l_iec=l_iec)

    grads: dict[str, np.ndarray] = {
        name: np.zeros_like(t) for name, t in params.tensors.items()
    }

    # Heads.
    grads["mlm_w"] += mlm_h.T @ d_mlm_logits
    grads["mlm_b"] += d_mlm_logits.sum(axis=0)
    grads["itm_w"] += cls.T @ d_itm_logits
    grads["itm_b"] += d_itm_logits.sum(axis=0)
    grads["ikm_w"] += cls.T @ d_ikm_logits
    grads["ikm_b"] += d_ikm_logits.sum(axis=0)
    grads["iec_w"] += cls.T @ d_iec_logits
    grads["iec_b"] += d_iec_logits.sum(axis=0)

    d_hidden = np.zeros_like(hidden)
    d_cls = (d_itm_logits @ params["itm_w"].T
             + d_ikm_logits @ params["ikm_w"].T
             + d_iec_logits @ params["iec_w"].T)
    d_hidden[:, 0, :] += d_cls
    if batch.mlm_targets.size:
        np.add.at(d_hidden, (batch.mlm_rows, batch.mlm_cols),
                  d_mlm_logits @ params["mlm_w"].T)

    scale = cache["scale"]
    nh, dh = cfg.heads, cfg.head_dim
    dx = d_hidden
    for l in reversed(range(cfg.layers)):
        pre = f"l{l}_"
        c = cache["layers"][l]
        d_res2, dg2, db2 = _layer_norm_backward(dx, c["ln2"], params[pre + "ln2_g"])
        grads[pre + "ln2_g"] += dg2
        grads[pre + "ln2_b"] += db2
        d_ffn_out = d_res2 if c["ffn_drop"] is None else d_res2 * c["ffn_drop"]
        grads[pre + "ffn_w2"] += c["ffn_act"].reshape(-1, cfg.ffn).T @ d_ffn_out.reshape(-1, h)
        grads[pre + "ffn_b2"] += d_ffn_out.sum(axis=(0, 1))
        d_act = d_ffn_out @ params[pre + "ffn_w2"].T
        d_pre = _gelu_backward(c["ffn_pre"], c["tanh"], d_act)
        grads[pre + "ffn_w1"] += c["x1"].reshape(-1, h).T @ d_pre.reshape(-1, cfg.ffn)
        grads[pre + "ffn_b1"] += d_pre.sum(axis=(0, 1))
        d_x1 = d_res2 + d_pre @ params[pre + "ffn_w1"].T

        d_res1, dg1, db1 = _layer_norm_backward(d_x1, c["ln1"], params[pre + "ln1_g"])
        grads[pre + "ln1_g"] += dg1
        grads[pre + "ln1_b"] += db1
        d_attn_out = d_res1 if c["out_drop"] is None else d_res1 * c["out_drop"]
        grads[pre + "attn_wo"] += c["ctx"].reshape(-1, h).T @ d_attn_out.reshape(-1, h)
        grads[pre + "attn_bo"] += d_attn_out.sum(axis=(0, 1))
        d_ctx = (d_attn_out @ params[pre + "attn_wo"].T)
        d_ctx = d_ctx.reshape(bsz, seq_len, nh, dh).transpose(0, 2, 1, 3)

        attn_used = c["attn"] if c["attn_drop"] is None else c["attn"] * c["attn_drop"]
        d_attn_used = d_ctx @ c["v"].transpose(0, 1, 3, 2)
        d_v = attn_used.transpose(0, 1, 3, 2) @ d_ctx
        if c["attn_drop"] is not None:
            d_attn = d_attn_used * c["attn_drop"]
        else:
            d_attn = d_attn_used
        d_scores = c["attn"] * (d_attn - (d_attn * c["attn"]).sum(axis=-1, keepdims=True))
        d_q = d_scores @ c["k"] * scale
        d_k = d_scores.transpose(0, 1, 3, 2) @ c["q"] * scale

        def _merge(t4):
            return t4.transpose(0, 2, 1, 3).reshape(bsz, seq_len, h)

        d_q_flat, d_k_flat, d_v_flat = _merge(d_q), _merge(d_k), _merge(d_v)
        x_in_flat = c["x_in"].reshape(-1, h)
        grads[pre + "attn_wq"] += x_in_flat.T @ d_q_flat.reshape(-1, h)
        grads[pre + "attn_bq"] += d_q_flat.sum(axis=(0, 1))
        grads[pre + "attn_wk"] += x_in_flat.T @ d_k_flat.reshape(-1, h)
        grads[pre + "attn_bk"] += d_k_flat.sum(axis=(0, 1))
        grads[pre + "attn_wv"] += x_in_flat.T @ d_v_flat.reshape(-1, h)
        grads[pre + "attn_bv"] += d_v_flat.sum(axis=(0, 1))
        dx = (d_res1
              + d_q_flat @ params[pre + "attn_wq"].T
              + d_k_flat @ params[pre + "attn_wk"].T
              + d_v_flat @ params[pre + "attn_wv"].T)

    if cache["emb_drop"] is not None:
        dx = dx * cache["emb_drop"]
    dx, dg, db = _layer_norm_backward(dx, cache["emb_ln"], params["emb_ln_g"])
    grads["emb_ln_g"] += dg
    grads["emb_ln_b"] += db

    t_len, n_vis = cache["t_len"], cache["n_vis"]
    d_text = dx[:, :t_len, :]
    d_vis = dx[:, t_len:, :]

    np.add.at(grads["tok_emb"], batch.token_ids, d_text)
    grads["pos_emb"][:t_len] += d_text.sum(axis=0)
    np.add.at(grads["seg_emb"], batch.segment_ids, d_text)
    if n_vis:
        grads["vis_pos_emb"][:n_vis] += d_vis.sum(axis=0)
        grads["seg_emb"][3] += d_vis.sum(axis=(0, 1))
        visual = cache["visual"]
        grads["vis_proj_w"] += visual.reshape(-1, cfg.visual_in).T @ d_vis.reshape(-1, h)
        grads["vis_proj_b"] += d_vis.sum(axis=(0, 1))

    return breakdown, grads


def loss(params: ModelParams, batch: Batch,
         rng: np.random.Generator | None = None) -> LossBreakdown:
    breakdown, _ = loss_and_grads(params, batch, rng)
    return breakdown


def backward(params: ModelParams, batch: Batch,
             rng: np.random.Generator | None = None) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of the total loss."""
    _, grads = loss_and_grads(params, batch, rng)
    return grads


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------

def synthetic_batch(config: ModelConfig, rng: np.random.Generator, *,
                    batch_size: int = 2, text_len: int = 8,
                    n_objects: int = 3, n_masked: int = 2) -> Batch:
    """Random well-formed batch for gradient checks and smoke tests."""
    t = text_len
    token_ids = rng.integers(5, config.vocab_size, size=(batch_size, t))
    token_ids[:, 0] = 2  # [CLS]
    token_ids[:, -1] = 3  # [SEP]
    segment_ids = rng.integers(0, 3, size=(batch_size, t))
    text_mask = np.ones((batch_size, t), dtype=bool)
    text_mask[0, -1] = False  # one padded tail position to exercise masking
    visual = rng.normal(size=(batch_size, n_objects, config.visual_in))
    visual_mask = np.ones((batch_size, n_objects), dtype=bool)
    if n_objects > 1:
        visual_mask[0, -1] = False
    rows = np.repeat(np.arange(batch_size), n_masked)
    cols = np.stack([rng.choice(np.arange(1, t - 1), size=n_masked, replace=False)
                     for _ in range(batch_size)]).reshape(-1)
    targets = rng.integers(5, config.vocab_size, size=rows.shape[0])
    return Batch(
        token_ids=token_ids, segment_ids=segment_ids, text_mask=text_mask,
        visual=visual, visual_mask=visual_mask,
        mlm_rows=rows, mlm_cols=cols, mlm_targets=targets,
        itm_labels=rng.integers(0, 3, size=batch_size),
        ikm_labels=rng.integers(0, 3, size=batch_size),
        iec_labels=rng.integers(0, 2, size=batch_size),
    )


def finite_difference_check(config: ModelConfig, seed: int, *,
                            epsilon: float = 1e-4) -> dict[str, float]:
    """Compare analytic gradients against central finite differences.

    Runs in double precision with dropout off. Returns the max relative
    error per parameter block, where the relative error of a pair (a, n) is
    |a - n| / max(1, |a|, |n|).
    """
    cfg = ModelConfig(**{**config.to_json_dict(), "dtype": "float64", "dropout": 0.0})
    rng = np.random.default_rng(seed)
    params = init_params(cfg, rng)
    batch = synthetic_batch(cfg, rng)
    _, grads = loss_and_grads(params, batch)

    errors: dict[str, float] = {}
    for name in params.names():
        tensor = params[name]
        analytic = grads[name]
        worst = 0.0
        flat = tensor.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_and_grads(params, batch)[0].total
            flat[i] = orig - epsilon
            down = loss_and_grads(params, batch)[0].total
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            a = analytic.reshape(-1)[i]
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, rel)
        errors[name] = worst
    return errors


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path: str | Path, params: ModelParams, *,
                    extras: dict | None = None) -> None:
    """Versioned binary checkpoint: JSON header (config, extras, block
    index) followed by raw little-endian float32 blocks."""
    names = params.names()
    header = {
        "model_config": params.config.to_json_dict(),
        "extras": extras or {},
        "blocks": [{"name": n, "shape": list(params[n].shape)} for n in names],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    buf.write(struct.pack("<Q", len(header_bytes)))
    buf.write(header_bytes)
    for name in names:
        buf.write(np.ascontiguousarray(params[name], dtype="<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[ModelParams, dict]:
    raw = Path(path).read_bytes()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise ValidationError(f"{path}: not a checkpoint file")
    version = struct.unpack("<I", raw[8:12])[0]
    if version != CHECKPOINT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {version}")
    header_len = struct.unpack("<Q", raw[12:20])[0]
    header = json.loads(raw[20:20 + header_len].decode("utf-8"))
    config = ModelConfig(**header["model_config"])
    offset = 20 + header_len
    tensors: dict[str, np.ndarray] = {}
    for block in header["blocks"]:
        shape = tuple(block["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
        offset += count * 4
        tensors[block["name"]] = arr.reshape(shape).astype(config.np_dtype)
    expected = set(parameter_shapes(config))
    if set(tensors) != expected:
        raise ValidationError(f"{path}: checkpoint blocks do not match the config")
    return ModelParams(config, tensors), header["extras"]
