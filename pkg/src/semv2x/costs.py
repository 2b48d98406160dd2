"""Analytic compute-cost model for the frozen encoder and attentive probe.

FLOPs are exact wide-integer counts (Python ints never overflow); the MLP
expansion ratio is handled through ``fractions.Fraction`` so integral ratios
stay exact at any scale.  Only the analytic model lives here; nothing is
profiled on real hardware.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .config import ClipSpec, DeviceSpec, EncoderSpec, QuantFormat, TokenizerSpec

__all__ = [
    "CostReport",
    "token_count",
    "patches_per_frame",
    "block_flops",
    "encoder_flops",
    "probe_flops",
    "probe_flops_effective",
    "total_flops",
    "inference_time",
    "activation_memory_elems",
    "activation_memory_bytes",
    "cost_report",
    "write_flops_csv",
]

FLOPS_CSV_COLUMNS = (
    "L", "D", "L_e", "r", "C",
    "F_enc", "F_probe", "F_probe_eff", "F_total", "M_enc_elems", "t_infer_ms",
)


@dataclass(frozen=True)
class CostReport:
    """Forward-pass cost of one clip through encoder + probe."""

    tokens: int
    flops_block: int
    flops_encoder: int
    flops_probe: int
    flops_probe_effective: int
    flops_total: int
    activation_elems: int
    infer_time_s: float


def patches_per_frame(clip: ClipSpec, tok: TokenizerSpec) -> int:
    """Spatial patches per frame: (height/patch) * (width/patch)."""
    if clip.height_px % tok.patch_px != 0:
        raise ValueError(
            f"patch {tok.patch_px} does not divide height {clip.height_px}")
    if clip.width_px % tok.patch_px != 0:
        raise ValueError(
            f"patch {tok.patch_px} does not divide width {clip.width_px}")
    return (clip.height_px // tok.patch_px) * (clip.width_px // tok.patch_px)


def token_count(clip: ClipSpec, tok: TokenizerSpec) -> int:
    """Spatiotemporal tokens per clip: (frames/tubelet) * patches per frame."""
    if clip.n_frames % tok.tubelet_frames != 0:
        raise ValueError(
            f"tubelet {tok.tubelet_frames} does not divide "
            f"n_frames {clip.n_frames}")
    return (clip.n_frames // tok.tubelet_frames) * patches_per_frame(clip, tok)


def _block_flops_frac(n_tokens: int, embed_dim: int, mlp_ratio) -> Fraction:
    L, D = n_tokens, embed_dim
    return 2 * L * L * D + (4 + 2 * Fraction(mlp_ratio)) * L * D * D


def _as_flops(value: Fraction) -> int:
    # Exotic non-integral expansion ratios can produce fractional totals;
    # round those to the nearest whole operation.
    if value.denominator == 1:
        return int(value)
    return round(value)


def block_flops(n_tokens: int, embed_dim: int, mlp_ratio) -> int:
    """FLOPs of one transformer block over a token sequence.

    Attention contributes 2*L^2*D; projections and the feed-forward MLP
    contribute (4 + 2r)*L*D^2.  An empty sequence costs nothing.
    """
    return _as_flops(_block_flops_frac(n_tokens, embed_dim, mlp_ratio))


def encoder_flops(n_tokens: int, enc: EncoderSpec) -> int:
    """Frozen encoder cost: block cost times the number of blocks."""
    return _as_flops(
        enc.depth * _block_flops_frac(n_tokens, enc.embed_dim, enc.mlp_ratio))


def probe_flops(n_tokens: int, embed_dim: int, n_classes: int) -> int:
    """Attentive probe + classifier cost including key/value/projection work:
    3*L*D^2 + 2*L*D + 3*D^2 + D*C."""
    L, D, C = n_tokens, embed_dim, n_classes
    return 3 * L * D * D + 2 * L * D + 3 * D * D + D * C


def probe_flops_effective(n_tokens: int, embed_dim: int, n_classes: int) -> int:
    """Probe cost with the per-token projection work folded into encoding:
    2*L*D + 3*D^2 + D*C, i.e. the O(D^2 + D*C) operating cost."""
    L, D, C = n_tokens, embed_dim, n_classes
    return 2 * L * D + 3 * D * D + D * C


def total_flops(enc_flops: int, probe_flops_: int) -> int:
    """Whole forward pass; no hidden terms beyond encoder + probe."""
    return enc_flops + probe_flops_


def inference_time(total: int, dev: DeviceSpec) -> float:
    """Seconds for one clip: compute and I/O both scale with the view count."""
    if dev.throughput_flops <= 0:
        raise ValueError("device throughput must be positive")
    return dev.n_views * (total / dev.throughput_flops) + dev.n_views * dev.io_latency_s


def activation_memory_elems(n_tokens: int, embed_dim: int) -> int:
    """Peak encoder activation footprint as an element count (tokens x width)."""
    return n_tokens * embed_dim


def activation_memory_bytes(n_tokens: int, embed_dim: int, fmt: QuantFormat) -> int:
    return activation_memory_elems(n_tokens, embed_dim) * fmt.bytes_per_element


def cost_report(
    clip: ClipSpec,
    tok: TokenizerSpec,
    enc: EncoderSpec,
    n_classes: int,
    dev: DeviceSpec,
) -> CostReport:
    """Assemble the full analytic cost of one clip under a configuration."""
    L = token_count(clip, tok)
    f_block = block_flops(L, enc.embed_dim, enc.mlp_ratio)
    f_enc = encoder_flops(L, enc)
    f_probe = probe_flops(L, enc.embed_dim, n_classes)
    f_total = total_flops(f_enc, f_probe)
    return CostReport(
        tokens=L,
        flops_block=f_block,
        flops_encoder=f_enc,
        flops_probe=f_probe,
        flops_probe_effective=probe_flops_effective(L, enc.embed_dim, n_classes),
        flops_total=f_total,
        activation_elems=activation_memory_elems(L, enc.embed_dim),
        infer_time_s=inference_time(f_total, dev),
    )


def write_flops_csv(rows: Iterable[dict], path) -> None:
    """Write cost-sweep rows with the fixed column order above."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FLOPS_CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row["L"], row["D"], row["L_e"], f"{row['r']:.6g}", row["C"],
                row["F_enc"], row["F_probe"], row["F_probe_eff"],
                row["F_total"], row["M_enc_elems"],
                f"{row['t_infer_ms']:.6g}",
            ])
