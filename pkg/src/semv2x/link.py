"""V2X link model: payload sizes, embedding quantization, rate and latency.

The link is modeled purely as a data rate.  The rate law is Shannon capacity
``B * log2(1 + snr_linear)`` at the configured SNR operating point; at the
default operating points (BPSK at 12 dB, QAM-16 at 22 dB) this reproduces the
reference latencies for all three encoding formats, which a plain
bits-per-symbol model does not.  No bit errors, fading or retransmissions are
simulated.

Byte payloads store elements in little-endian order (``<f4`` for FP32, ``<f2``
for FP16, signed bytes for INT8).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ClipSpec, LinkSpec, QuantFormat

__all__ = [
    "V2X_DEADLINE_S",
    "PayloadReport",
    "QuantizedEmbedding",
    "raw_payload_bytes",
    "semantic_payload_bytes",
    "compression_ratio",
    "quantize_embedding",
    "dequantize_embedding",
    "link_rate_bps",
    "tx_latency_s",
    "meets_v2x_deadline",
    "latency_table",
    "write_latency_csv",
]

# Hard real-time budget for a safety message on the link.
V2X_DEADLINE_S = 5e-3

LATENCY_CSV_COLUMNS = (
    "format", "payload_bytes", "modulation", "snr_db",
    "rate_bps", "latency_ms", "meets_deadline",
)


@dataclass(frozen=True)
class PayloadReport:
    """Raw vs semantic payload for one clip/format combination."""

    raw_bytes: int
    sem_bytes: int
    ratio: float


@dataclass(frozen=True)
class QuantizedEmbedding:
    """Wire form of one embedding vector.

    ``scale`` is the symmetric per-vector INT8 step; None for FP32/FP16.
    """

    format: QuantFormat
    scale: Optional[float]
    payload: bytes
    dim: int


def raw_payload_bytes(clip: ClipSpec) -> int:
    """Bytes of the unencoded clip: frames x native height x width x 3 (RGB)."""
    return clip.n_frames * clip.orig_height_px * clip.orig_width_px * 3


def semantic_payload_bytes(embed_dim: int, fmt: QuantFormat) -> int:
    """Bytes of the single pooled embedding vector crossing the link."""
    if embed_dim < 1:
        raise ValueError(f"embed_dim must be >= 1, got {embed_dim}")
    return 1 * embed_dim * fmt.bytes_per_element


def compression_ratio(raw_bytes: float, sem_bytes: float) -> float:
    """Raw payload divided by transmitted semantic payload."""
    if sem_bytes <= 0:
        raise ValueError("semantic payload must be positive")
    return raw_bytes / sem_bytes


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize_embedding(vec, fmt: QuantFormat) -> QuantizedEmbedding:
    """Encode a 1-D embedding vector for transmission.

    FP32/FP16 are IEEE casts (round to nearest even).  INT8 uses a symmetric
    per-vector scale ``max|x| / 127`` with codes rounded half away from zero
    and clamped to [-127, 127]; an all-zero vector stores scale 1 so its
    dequantization stays defined.
    """
    x = np.asarray(vec, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("embedding contains non-finite values")

    if fmt is QuantFormat.FP32:
        return QuantizedEmbedding(fmt, None, x.astype("<f4").tobytes(), x.size)
    if fmt is QuantFormat.FP16:
        return QuantizedEmbedding(fmt, None, x.astype("<f2").tobytes(), x.size)

    max_abs = float(np.max(np.abs(x))) if x.size else 0.0
    if max_abs == 0.0:
        scale = 1.0
        codes = np.zeros(x.size, dtype=np.int8)
    else:
        scale = max_abs / 127.0
        # x * 127 / max_abs is the same quantity as x / scale but keeps the
        # half-way cases (e.g. 0.5 at max_abs 1.0) exact in float arithmetic.
        codes = _round_half_away(x * 127.0 / max_abs)
        codes = np.clip(codes, -127, 127).astype(np.int8)
    return QuantizedEmbedding(fmt, scale, codes.tobytes(), x.size)


def dequantize_embedding(q: QuantizedEmbedding) -> np.ndarray:
    """Reconstruct the float64 vector from its wire form.

    The FP32 path returns exactly the transmitted single-precision values;
    INT8 reconstruction error is at most scale/2 per element.
    """
    expected = q.dim * q.format.bytes_per_element
    if len(q.payload) != expected:
        raise ValueError(
            f"payload length {len(q.payload)} != dim {q.dim} x "
            f"{q.format.bytes_per_element} bytes"
        )
    if q.format is QuantFormat.FP32:
        return np.frombuffer(q.payload, dtype="<f4").astype(np.float64)
    if q.format is QuantFormat.FP16:
        return np.frombuffer(q.payload, dtype="<f2").astype(np.float64)
    codes = np.frombuffer(q.payload, dtype=np.int8).astype(np.float64)
    return codes * float(q.scale)


def link_rate_bps(link: LinkSpec) -> float:
    """Shannon-capacity data rate of the link in bits/second."""
    if link.bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    snr_linear = 10.0 ** (link.snr_db / 10.0)
    return link.bandwidth_hz * math.log2(1.0 + snr_linear)


def tx_latency_s(payload_bytes: float, link: LinkSpec) -> float:
    """Transmission time of a payload over the link."""
    if payload_bytes < 0:
        raise ValueError("payload must be non-negative")
    return 8.0 * payload_bytes / link_rate_bps(link)


def meets_v2x_deadline(latency_s: float, deadline_s: float = V2X_DEADLINE_S) -> bool:
    """True when the latency fits the V2X budget (inclusive boundary)."""
    if latency_s < 0:
        raise ValueError("latency must be non-negative")
    return latency_s <= deadline_s


def latency_table(
    embed_dim: int,
    links: Sequence[LinkSpec],
    formats: Sequence[QuantFormat] = (QuantFormat.FP32, QuantFormat.FP16, QuantFormat.INT8),
) -> list[dict]:
    """One row per (link, format): payload, rate and latency on that link."""
    rows = []
    for link in links:
        rate = link_rate_bps(link)
        for fmt in formats:
            payload = semantic_payload_bytes(embed_dim, fmt)
            latency = tx_latency_s(payload, link)
            rows.append({
                "format": fmt.name,
                "payload_bytes": payload,
                "modulation": link.modulation.name,
                "snr_db": link.snr_db,
                "rate_bps": rate,
                "latency_ms": latency * 1e3,
                "meets_deadline": meets_v2x_deadline(latency),
            })
    return rows


def write_latency_csv(rows: Iterable[dict], path) -> None:
    """Write latency rows with fixed column order; latencies carry 4
    significant digits in milliseconds."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LATENCY_CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row["format"],
                row["payload_bytes"],
                row["modulation"],
                f"{row['snr_db']:.6g}",
                f"{row['rate_bps']:.6g}",
                f"{row['latency_ms']:.4g}",
                int(bool(row["meets_deadline"])),
            ])
