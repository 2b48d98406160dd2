"""Single-query attentive probe over frozen token embeddings.

The probe is the only trained component of the pipeline: a query vector
cross-attends over the token matrix, the pooled vector passes through a
two-layer ReLU head, and a linear classifier produces collision/safe logits.
Forward, backward, and the Adam loop are written out in numpy so every
gradient is inspectable and checkable against finite differences.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "TrainSpec", "ProbeParams", "ProbeOutput", "PARAM_FIELDS",
    "init_params", "cross_attention", "probe_forward", "probe_backward",
    "sample_loss", "batch_loss", "train_probe", "classify", "head_logits",
    "save_params", "load_params",
]

# Field order is load-bearing: checkpoints serialize arrays in this order.
PARAM_FIELDS = (
    "query", "w_key", "w_value",
    "w_mlp1", "b_mlp1", "w_mlp2", "b_mlp2",
    "w_cls", "b_cls",
)


@dataclass(frozen=True)
class TrainSpec:
    """Optimizer settings for the probe (Adam, no weight decay)."""

    epochs: int = 40
    lr: float = 1e-3
    batch_size: int = 8
    seed: int = 0


@dataclass
class ProbeParams:
    query: np.ndarray    # (D,)
    w_key: np.ndarray    # (D, D)
    w_value: np.ndarray  # (D, D)
    w_mlp1: np.ndarray   # (D, Dh)
    b_mlp1: np.ndarray   # (Dh,)
    w_mlp2: np.ndarray   # (Dh, D)
    b_mlp2: np.ndarray   # (D,)
    w_cls: np.ndarray    # (D, C)
    b_cls: np.ndarray    # (C,)

    @property
    def embed_dim(self) -> int:
        return self.query.shape[0]

    @property
    def n_classes(self) -> int:
        return self.b_cls.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.b_mlp1.shape[0]

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_FIELDS}

    def copy(self) -> "ProbeParams":
        return ProbeParams(**{k: v.copy() for k, v in self.as_dict().items()})


@dataclass
class ProbeOutput:
    """Forward-pass result with the intermediates the backward pass reuses."""

    logits: np.ndarray        # (C,)
    probs: np.ndarray         # (C,)
    attn_weights: np.ndarray  # (L,)
    pooled: np.ndarray        # (D,)
    keys: np.ndarray          # (L, D)
    values: np.ndarray        # (L, D)
    mlp_pre: np.ndarray       # (Dh,) pre-activation
    features: np.ndarray      # (D,) classifier input


def init_params(embed_dim: int, n_classes: int = 2,
                hidden_dim: Optional[int] = None, seed: int = 0) -> ProbeParams:
    """Seeded uniform(-1/sqrt(D), 1/sqrt(D)) weights, zero biases."""
    if embed_dim < 1 or n_classes < 2:
        raise ValueError("need embed_dim >= 1 and n_classes >= 2")
    dh = embed_dim if not hidden_dim else hidden_dim
    bound = 1.0 / math.sqrt(embed_dim)
    rng = np.random.default_rng(seed)

    def u(*shape):
        return rng.uniform(-bound, bound, size=shape)

    return ProbeParams(
        query=u(embed_dim),
        w_key=u(embed_dim, embed_dim),
        w_value=u(embed_dim, embed_dim),
        w_mlp1=u(embed_dim, dh),
        b_mlp1=np.zeros(dh),
        w_mlp2=u(dh, embed_dim),
        b_mlp2=np.zeros(embed_dim),
        w_cls=u(embed_dim, n_classes),
        b_cls=np.zeros(n_classes),
    )


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max()
    ez = np.exp(z)
    return ez / ez.sum()


def cross_attention(tokens: np.ndarray, query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Literal single-query attention: the token matrix supplies both keys
    and values.  Returns (pooled, weights) with

        weights = softmax(Z q / sqrt(D)),  pooled = weights^T Z.
    """
    z = np.asarray(tokens, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    if z.ndim != 2 or q.ndim != 1 or z.shape[1] != q.shape[0]:
        raise ValueError(f"shape mismatch: tokens {z.shape}, query {q.shape}")
    weights = _softmax(z @ q / math.sqrt(q.shape[0]))
    return weights @ z, weights


def _check_tokens(params: ProbeParams, tokens: np.ndarray) -> np.ndarray:
    z = np.asarray(tokens, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 1:
        raise ValueError(f"tokens must be (L, D), got {z.shape}")
    if z.shape[1] != params.embed_dim:
        raise ValueError(
            f"token dim {z.shape[1]} != probe dim {params.embed_dim}")
    return z


def probe_forward(params: ProbeParams, tokens: np.ndarray) -> ProbeOutput:
    z = _check_tokens(params, tokens)
    d = params.embed_dim
    keys = z @ params.w_key
    values = z @ params.w_value
    weights = _softmax(keys @ params.query / math.sqrt(d))
    pooled = weights @ values
    mlp_pre = pooled @ params.w_mlp1 + params.b_mlp1
    hidden = np.maximum(mlp_pre, 0.0)
    features = hidden @ params.w_mlp2 + params.b_mlp2
    logits = features @ params.w_cls + params.b_cls
    return ProbeOutput(
        logits=logits,
        probs=_softmax(logits),
        attn_weights=weights,
        pooled=pooled,
        keys=keys,
        values=values,
        mlp_pre=mlp_pre,
        features=features,
    )


def sample_loss(params: ProbeParams, tokens: np.ndarray, label: int) -> float:
    """Cross-entropy of one sample, computed in log-sum-exp form."""
    logits = probe_forward(params, tokens).logits
    m = logits.max()
    return float(m + np.log(np.exp(logits - m).sum()) - logits[label])


def probe_backward(params: ProbeParams, tokens: np.ndarray, label: int,
                   out: Optional[ProbeOutput] = None) -> Tuple[dict, float]:
    """Analytic cross-entropy gradients for one sample.

    Returns ({field: grad}, loss).  The softmax-through-attention term uses
    ds = w * (dw - (w . dw)), the usual Jacobian contraction.
    """
    z = _check_tokens(params, tokens)
    if out is None:
        out = probe_forward(params, z)
    if not 0 <= label < params.n_classes:
        raise ValueError(f"label {label} outside [0, {params.n_classes})")
    d = params.embed_dim
    w = out.attn_weights
    hidden = np.maximum(out.mlp_pre, 0.0)

    dlogits = out.probs.copy()
    dlogits[label] -= 1.0

    g_w_cls = np.outer(out.features, dlogits)
    g_b_cls = dlogits
    dfeat = params.w_cls @ dlogits

    g_w_mlp2 = np.outer(hidden, dfeat)
    g_b_mlp2 = dfeat
    dhidden = params.w_mlp2 @ dfeat
    dpre = dhidden * (out.mlp_pre > 0.0)

    g_w_mlp1 = np.outer(out.pooled, dpre)
    g_b_mlp1 = dpre
    dpooled = params.w_mlp1 @ dpre

    dvalues = np.outer(w, dpooled)
    dw = out.values @ dpooled
    dscores = w * (dw - w @ dw)

    g_query = out.keys.T @ dscores / math.sqrt(d)
    dkeys = np.outer(dscores, params.query) / math.sqrt(d)
    g_w_key = z.T @ dkeys
    g_w_value = z.T @ dvalues

    m = out.logits.max()
    loss = float(m + np.log(np.exp(out.logits - m).sum()) - out.logits[label])
    grads = {
        "query": g_query, "w_key": g_w_key, "w_value": g_w_value,
        "w_mlp1": g_w_mlp1, "b_mlp1": g_b_mlp1,
        "w_mlp2": g_w_mlp2, "b_mlp2": g_b_mlp2,
        "w_cls": g_w_cls, "b_cls": g_b_cls,
    }
    return grads, loss


def batch_loss(params: ProbeParams, batch: Sequence[Tuple[np.ndarray, int]]) -> float:
    """Mean cross-entropy over (tokens, label) pairs."""
    if not batch:
        raise ValueError("empty batch")
    return sum(sample_loss(params, z, y) for z, y in batch) / len(batch)


def _batch_grads(params: ProbeParams, batch) -> Tuple[dict, float]:
    acc = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    total = 0.0
    for z, y in batch:
        grads, loss = probe_backward(params, z, y)
        for k in acc:
            acc[k] += grads[k]
        total += loss
    n = len(batch)
    for k in acc:
        acc[k] /= n
    return acc, total / n


def train_probe(params: ProbeParams,
                dataset: Sequence[Tuple[np.ndarray, int]],
                spec: TrainSpec = TrainSpec()) -> Tuple[ProbeParams, List[float]]:
    """Adam on mean cross-entropy; returns updated params and the per-epoch
    mean loss history.  The input params are not mutated."""
    if not dataset:
        raise ValueError("empty dataset")
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    params = params.copy()
    m = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    v = {k: np.zeros_like(val) for k, val in params.as_dict().items()}
    rng = np.random.default_rng(spec.seed)
    history: List[float] = []
    step = 0

    for _ in range(spec.epochs):
        order = rng.permutation(len(dataset))
        epoch_losses = []
        for lo in range(0, len(dataset), spec.batch_size):
            batch = [dataset[i] for i in order[lo:lo + spec.batch_size]]
            grads, loss = _batch_grads(params, batch)
            epoch_losses.append(loss)
            step += 1
            bc1 = 1.0 - beta1 ** step
            bc2 = 1.0 - beta2 ** step
            for k, g in grads.items():
                m[k] = beta1 * m[k] + (1.0 - beta1) * g
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g
                update = spec.lr * (m[k] / bc1) / (np.sqrt(v[k] / bc2) + eps)
                setattr(params, k, getattr(params, k) - update)
        history.append(float(np.mean(epoch_losses)))
    return params, history


def head_logits(params: ProbeParams, pooled: np.ndarray) -> np.ndarray:
    """Vehicle-side head: MLP + classifier applied to a received pooled
    vector (the part of the probe that runs after the link)."""
    a = np.asarray(pooled, dtype=np.float64)
    if a.shape != (params.embed_dim,):
        raise ValueError(f"pooled vector must be ({params.embed_dim},), got {a.shape}")
    hidden = np.maximum(a @ params.w_mlp1 + params.b_mlp1, 0.0)
    features = hidden @ params.w_mlp2 + params.b_mlp2
    return features @ params.w_cls + params.b_cls


def classify(params: ProbeParams, tokens: np.ndarray) -> int:
    """Predicted class index; ties resolve to the lowest index."""
    return int(np.argmax(probe_forward(params, tokens).logits))


# ---------------------------------------------------------------------------
# Checkpoint format: 12-byte header (dim, classes, hidden as uint32 LE)
# followed by the parameter arrays as float64 LE in declared order.
# ---------------------------------------------------------------------------

def save_params(params: ProbeParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<III", params.embed_dim, params.n_classes,
                             params.hidden_dim))
        for name in PARAM_FIELDS:
            arr = np.ascontiguousarray(getattr(params, name), dtype="<f8")
            fh.write(arr.tobytes())


def _param_shapes(d: int, c: int, dh: int):
    return {
        "query": (d,), "w_key": (d, d), "w_value": (d, d),
        "w_mlp1": (d, dh), "b_mlp1": (dh,), "w_mlp2": (dh, d), "b_mlp2": (d,),
        "w_cls": (d, c), "b_cls": (c,),
    }


def load_params(path) -> ProbeParams:
    with open(path, "rb") as fh:
        header = fh.read(12)
        if len(header) != 12:
            raise ValueError("truncated checkpoint header")
        d, c, dh = struct.unpack("<III", header)
        shapes = _param_shapes(d, c, dh)
        arrays = {}
        for name in PARAM_FIELDS:
            count = int(np.prod(shapes[name]))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"truncated checkpoint at {name}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").astype(
                np.float64).reshape(shapes[name])
        if fh.read(1):
            raise ValueError("trailing bytes after checkpoint payload")
    return ProbeParams(**arrays)
