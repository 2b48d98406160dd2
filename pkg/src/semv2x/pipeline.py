"""End-to-end experiment runner.

Wires the whole chain per clip: scenario -> post-processing -> encoder stub ->
attentive probe -> pooled vector -> quantized link -> vehicle-side classifier.
One experiment trains a probe per condition (post-processing mode x frame gap)
on the shared train split and evaluates the held-out split under each link
format.  Everything downstream of (config, seed) is deterministic; stages are
pure per clip, so the per-clip loop is trivially parallelizable as long as
results are reduced in clip-id order (which they are: the test list is
sorted).

Positive class throughout is COLLISION (index 1).
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import costs, link
from .config import (
    DEFAULT_SNR_DB, ExperimentConfig, LinkSpec, Modulation, QuantFormat,
    ValidationError, config_to_text, validate_config,
)
from .encoder import encode_stub
from .probe import (
    ProbeParams, TrainSpec, classify, head_logits, init_params, probe_forward,
    train_probe,
)
from .scenario import (
    ClipLabel, DatasetSplit, PostMode, align_length, apply_post, build_dataset,
    frame_gap_trim,
)

__all__ = [
    "POSITIVE_CLASS", "ConfusionMatrix", "ConditionResult", "ExperimentReport",
    "label_class", "compute_metrics", "f1_score", "config_digest",
    "payload_rows", "latency_rows", "flops_rows", "condition_plan",
    "build_config_dataset", "run_condition", "run_e2e",
    "PAYLOAD_CSV_COLUMNS", "METRICS_CSV_COLUMNS", "PREDICTIONS_CSV_COLUMNS",
]

POSITIVE_CLASS = 1  # collision

GAP_SWEEP = (4, 8, 12)

PAYLOAD_CSV_COLUMNS = ("mode", "n_frames", "format", "raw_bytes", "sem_bytes", "ratio")
METRICS_CSV_COLUMNS = (
    "post", "gap", "format", "n_train", "n_test",
    "tp", "fp", "tn", "fn",
    "accuracy", "precision", "recall", "f1", "agree_with_fp32",
)
PREDICTIONS_CSV_COLUMNS = ("post", "gap", "clip_id", "label", "fp32", "fp16", "int8")

_FORMATS = (QuantFormat.FP32, QuantFormat.FP16, QuantFormat.INT8)


def label_class(label: ClipLabel) -> int:
    return 1 if label is ClipLabel.COLLISION else 0


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with COLLISION as the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_pairs(cls, y_true: Sequence[int], y_pred: Sequence[int]) -> "ConfusionMatrix":
        if len(y_true) != len(y_pred):
            raise ValueError("label/prediction length mismatch")
        tp = fp = tn = fn = 0
        for t, p in zip(y_true, y_pred):
            if t == POSITIVE_CLASS:
                if p == POSITIVE_CLASS:
                    tp += 1
                else:
                    fn += 1
            else:
                if p == POSITIVE_CLASS:
                    fp += 1
                else:
                    tn += 1
        return cls(tp=tp, fp=fp, tn=tn, fn=fn)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean; zero when both terms vanish."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def compute_metrics(cm: ConfusionMatrix) -> dict:
    """Accuracy/precision/recall/F1 with explicit degenerate conventions.

    With no predicted positives, precision is 1.0 when there were also no
    actual positives (nothing was missed) and 0.0 otherwise; recall is the
    mirror case.  This keeps an all-negative, all-correct evaluation at a
    perfect score instead of dividing by zero.
    """
    if cm.total <= 0:
        raise ValueError("empty confusion matrix")
    if min(cm.tp, cm.fp, cm.tn, cm.fn) < 0:
        raise ValueError("negative counts")
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 1.0 if cm.fn == 0 else 0.0
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 1.0 if cm.fp == 0 else 0.0
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f1": f1_score(precision, recall),
    }


# ---------------------------------------------------------------------------
# Report data
# ---------------------------------------------------------------------------

@dataclass
class ConditionResult:
    """Outcome of one (post-processing, frame-gap) condition."""

    post: PostMode
    gap: int
    n_train: int
    n_test: int
    cms: dict                 # format name -> ConfusionMatrix
    metrics: dict             # format name -> metric dict
    agreement: dict           # format name -> fraction matching FP32
    predictions: List[dict]   # {clip_id, label, fp32, fp16, int8}
    loss_history: List[float]


@dataclass
class ExperimentReport:
    """Everything one experiment produced, ready for serialization."""

    config_text: str
    config_hash: str
    seed: int
    probe_at_vehicle: bool
    payload_rows: List[dict]
    latency_rows: List[dict]
    flops_rows: List[dict]
    conditions: List[ConditionResult]
    skipped: List[dict] = field(default_factory=list)


def config_digest(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical config serialization (provenance tag)."""
    return hashlib.sha256(config_to_text(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Static tables (payload, latency, flops)
# ---------------------------------------------------------------------------

def payload_rows(cfg: ExperimentConfig) -> List[dict]:
    """Raw-vs-semantic payload for both transmission modes.

    ``pooled`` rows carry the single 1 x D vector; ``tokens`` rows carry the
    full L x D matrix (the probe-at-vehicle alternative).  Clip lengths cover
    a mid-length clip (33 frames) and the configured maximum.
    """
    d = cfg.encoder.embed_dim
    tp = cfg.tokenizer.tubelet_frames
    rows = []
    lengths = sorted({33, cfg.clip.n_frames})
    for mode in ("pooled", "tokens"):
        for n in lengths:
            raw_b = link.raw_payload_bytes(replace(cfg.clip, n_frames=n))
            for fmt in _FORMATS:
                if mode == "pooled":
                    sem_b = link.semantic_payload_bytes(d, fmt)
                else:
                    n_eff = (n // tp) * tp
                    if n_eff == 0:
                        continue
                    n_tokens = costs.token_count(
                        replace(cfg.clip, n_frames=n_eff), cfg.tokenizer)
                    sem_b = n_tokens * d * fmt.bytes_per_element
                rows.append({
                    "mode": mode,
                    "n_frames": n,
                    "format": fmt.name,
                    "raw_bytes": raw_b,
                    "sem_bytes": sem_b,
                    "ratio": link.compression_ratio(raw_b, sem_b),
                })
    return rows


def latency_rows(cfg: ExperimentConfig) -> List[dict]:
    """Latency of the pooled payload at the standard operating points,
    plus the configured link when it differs from both."""
    links = [
        LinkSpec(bandwidth_hz=cfg.link.bandwidth_hz,
                 snr_db=DEFAULT_SNR_DB[Modulation.BPSK],
                 modulation=Modulation.BPSK),
        LinkSpec(bandwidth_hz=cfg.link.bandwidth_hz,
                 snr_db=DEFAULT_SNR_DB[Modulation.QAM16],
                 modulation=Modulation.QAM16),
    ]
    if all((cfg.link.modulation, cfg.link.snr_db)
           != (l.modulation, l.snr_db) for l in links):
        links.append(cfg.link)
    return link.latency_table(cfg.encoder.embed_dim, links)


def flops_rows(cfg: ExperimentConfig) -> List[dict]:
    report = costs.cost_report(cfg.clip, cfg.tokenizer, cfg.encoder,
                               cfg.probe.n_classes, cfg.device)
    return [{
        "L": report.tokens,
        "D": cfg.encoder.embed_dim,
        "L_e": cfg.encoder.depth,
        "r": cfg.encoder.mlp_ratio,
        "C": cfg.probe.n_classes,
        "F_enc": report.flops_encoder,
        "F_probe": report.flops_probe,
        "F_probe_eff": report.flops_probe_effective,
        "F_total": report.flops_total,
        "M_enc_elems": report.activation_elems,
        "t_infer_ms": report.infer_time_s * 1e3,
    }]


# ---------------------------------------------------------------------------
# Experiment proper
# ---------------------------------------------------------------------------

def _require_valid(cfg: ExperimentConfig) -> None:
    violations = validate_config(cfg)
    if violations:
        raise ValidationError("; ".join(violations))


def build_config_dataset(cfg: ExperimentConfig, *, post: Optional[PostMode] = None,
                         gap: Optional[int] = None) -> DatasetSplit:
    """Dataset exactly as the config describes it (used by gen/train)."""
    _require_valid(cfg)
    return build_dataset(
        cfg.world,
        cfg.data.n_safe,
        cfg.data.n_collision,
        cfg.data.post if post is None else post,
        cfg.data.gap if gap is None else gap,
        cfg.data.seed,
        height_px=cfg.clip.height_px,
        width_px=cfg.clip.width_px,
        channels=cfg.clip.channels,
        fps=cfg.clip.fps,
        max_frames=cfg.clip.n_frames,
        train_frac=cfg.data.train_frac,
    )


def condition_plan(cfg: ExperimentConfig) -> List[Tuple[PostMode, int]]:
    """All four post modes at the configured gap, then the gap sweep at the
    configured post mode (duplicates removed, order preserved)."""
    plan: List[Tuple[PostMode, int]] = []
    for post in (PostMode.NONE, PostMode.HEATMAP, PostMode.MASK, PostMode.HYBRID):
        plan.append((post, cfg.data.gap))
    for gap in GAP_SWEEP:
        pair = (cfg.data.post, gap)
        if pair not in plan:
            plan.append(pair)
    return plan


def _transform_clips(clips, post: PostMode, gap: int, skipped: List[dict]):
    out = []
    for clip in clips:
        try:
            if clip.label is ClipLabel.COLLISION and gap > 0:
                clip = frame_gap_trim(clip, gap)
            out.append(apply_post(clip, post))
        except Exception as exc:  # noqa: BLE001 - clip-level isolation
            skipped.append({"clip_id": clip.clip_id, "post": post.value,
                            "gap": gap, "stage": "post", "reason": str(exc)})
    return out


def _encode_set(clips, cfg: ExperimentConfig, post: PostMode, gap: int,
                skipped: List[dict]):
    samples = []
    for clip in clips:
        try:
            aligned = align_length(clip, cfg.tokenizer.tubelet_frames)
            tokens = encode_stub(aligned, cfg.tokenizer,
                                 cfg.encoder.embed_dim, cfg.data.seed)
            samples.append((tokens, label_class(clip.label), clip.clip_id))
        except Exception as exc:  # noqa: BLE001 - clip-level isolation
            skipped.append({"clip_id": clip.clip_id, "post": post.value,
                            "gap": gap, "stage": "encode", "reason": str(exc)})
    return samples


def _predict_all_formats(params: ProbeParams, tokens: np.ndarray,
                         probe_at_vehicle: bool) -> dict:
    preds = {}
    if probe_at_vehicle:
        # every token row crosses the link, quantized independently
        for fmt in _FORMATS:
            rec = np.stack([
                link.dequantize_embedding(link.quantize_embedding(row, fmt))
                for row in tokens])
            preds[fmt.name.lower()] = classify(params, rec)
    else:
        pooled = probe_forward(params, tokens).pooled
        for fmt in _FORMATS:
            rec = link.dequantize_embedding(link.quantize_embedding(pooled, fmt))
            preds[fmt.name.lower()] = int(np.argmax(head_logits(params, rec)))
    return preds


def run_condition(cfg: ExperimentConfig, split: DatasetSplit, post: PostMode,
                  gap: int, probe_at_vehicle: bool = False,
                  skipped: Optional[List[dict]] = None) -> ConditionResult:
    """Train and evaluate one condition on an already generated raw split.

    ``split`` must hold untrimmed, unprocessed clips; the condition's gap and
    post-processing are applied here so one generation pass serves every
    condition.
    """
    if skipped is None:
        skipped = []
    train_clips = _transform_clips(split.train, post, gap, skipped)
    test_clips = _transform_clips(split.test, post, gap, skipped)

    train_set = _encode_set(train_clips, cfg, post, gap, skipped)
    test_set = _encode_set(test_clips, cfg, post, gap, skipped)
    if not train_set or not test_set:
        raise ValidationError(f"condition {post.value}/gap={gap}: empty split")

    params = init_params(cfg.encoder.embed_dim, cfg.probe.n_classes,
                         cfg.probe.hidden_dim, seed=cfg.data.seed)
    params, history = train_probe(
        params, [(z, y) for z, y, _ in train_set], cfg.train)

    predictions = []
    y_true = []
    for tokens, y, clip_id in test_set:
        try:
            preds = _predict_all_formats(params, tokens, probe_at_vehicle)
        except Exception as exc:  # noqa: BLE001 - clip-level isolation
            skipped.append({"clip_id": clip_id, "post": post.value,
                            "gap": gap, "stage": "predict", "reason": str(exc)})
            continue
        predictions.append({"clip_id": clip_id, "label": y, **preds})
        y_true.append(y)

    cms, metrics, agreement = {}, {}, {}
    base = [p["fp32"] for p in predictions]
    for fmt in _FORMATS:
        key = fmt.name.lower()
        y_pred = [p[key] for p in predictions]
        cm = ConfusionMatrix.from_pairs(y_true, y_pred)
        cms[key] = cm
        metrics[key] = compute_metrics(cm)
        same = sum(a == b for a, b in zip(y_pred, base))
        agreement[key] = same / len(base) if base else 1.0

    return ConditionResult(
        post=post, gap=gap,
        n_train=len(train_set), n_test=len(predictions),
        cms=cms, metrics=metrics, agreement=agreement,
        predictions=predictions, loss_history=history,
    )


def run_e2e(cfg: ExperimentConfig, probe_at_vehicle: bool = False,
            log: Optional[Callable[[str], None]] = None) -> ExperimentReport:
    """Full experiment: generate once, then train/evaluate every condition.

    ``log`` receives human-oriented progress lines with stage timings; it has
    no influence on the report, which depends only on (config, seed).
    """
    _require_valid(cfg)
    emit = log or (lambda _: None)

    t0 = time.perf_counter()
    raw = build_config_dataset(cfg, post=PostMode.NONE, gap=0)
    emit(f"generated {len(raw.train) + len(raw.test)} clips "
         f"({len(raw.train)} train / {len(raw.test)} test) "
         f"in {time.perf_counter() - t0:.2f} s")

    skipped: List[dict] = []
    conditions = []
    for post, gap in condition_plan(cfg):
        t1 = time.perf_counter()
        result = run_condition(cfg, raw, post, gap, probe_at_vehicle, skipped)
        emit(f"condition post={post.value} gap={gap}: "
             f"f1={result.metrics['fp32']['f1']:.4f} "
             f"int8 agreement={result.agreement['int8']:.4f} "
             f"in {time.perf_counter() - t1:.2f} s")
        conditions.append(result)

    report = ExperimentReport(
        config_text=config_to_text(cfg),
        config_hash=config_digest(cfg),
        seed=cfg.data.seed,
        probe_at_vehicle=probe_at_vehicle,
        payload_rows=payload_rows(cfg),
        latency_rows=latency_rows(cfg),
        flops_rows=flops_rows(cfg),
        conditions=conditions,
        skipped=skipped,
    )
    emit(f"e2e finished in {time.perf_counter() - t0:.2f} s "
         f"({len(skipped)} clip(s) skipped)")
    return report
