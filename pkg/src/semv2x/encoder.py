"""Deterministic stand-in for the frozen video encoder.

A real deployment runs a large pretrained transformer; for desk-scale
experiments we only need token embeddings that are reproducible and that
carry motion information.  Each spatiotemporal tubelet is flattened, paired
with its temporal difference against the previous tubelet at the same
spatial site (zero for the first slot), and projected through a fixed
seeded random matrix.  Using one seed per experiment mimics a frozen
encoder: every clip is embedded by the same map.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, List

import numpy as np

from .config import TokenizerSpec

__all__ = ["encode_stub", "encode_clips", "token_grid"]


def token_grid(n_frames: int, height_px: int, width_px: int,
               tok: TokenizerSpec) -> tuple[int, int, int]:
    """(temporal slots, patch rows, patch cols) for a clip under a tokenizer."""
    if n_frames % tok.tubelet_frames != 0:
        raise ValueError(
            f"{n_frames} frames not divisible by tubelet {tok.tubelet_frames}; "
            "drop leading frames first")
    if height_px % tok.patch_px or width_px % tok.patch_px:
        raise ValueError(
            f"frame {height_px}x{width_px} not divisible by patch {tok.patch_px}")
    return (n_frames // tok.tubelet_frames,
            height_px // tok.patch_px,
            width_px // tok.patch_px)


@lru_cache(maxsize=8)
def _projection(feat_dim: int, embed_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([abs(seed), feat_dim, embed_dim])
    return rng.standard_normal((feat_dim, embed_dim)) / math.sqrt(feat_dim)


def encode_stub(clip, tok: TokenizerSpec, embed_dim: int, seed: int = 0) -> np.ndarray:
    """Embed a clip (or raw frame array) into an (L, D) token matrix.

    Tokens are ordered temporal-major, then patch-row, then patch-column.
    Within a token, pixels flatten time-major, then row, column, channel,
    normalized to [0, 1]; the second half of the feature vector is the
    temporal difference to the previous tubelet at that spatial site.
    """
    frames = clip.frames if hasattr(clip, "frames") else np.asarray(clip)
    if frames.ndim == 3:
        frames = frames[..., None]
    if frames.ndim != 4:
        raise ValueError(f"expected (N, H, W[, C]) frames, got {frames.shape}")
    n, h, w, c = frames.shape
    nt, hp, wp = token_grid(n, h, w, tok)
    tp, p = tok.tubelet_frames, tok.patch_px

    x = frames.astype(np.float64) / 255.0
    x = x.reshape(nt, tp, hp, p, wp, p, c)
    x = x.transpose(0, 2, 4, 1, 3, 5, 6)           # (nt, hp, wp, tp, p, p, c)
    flat = x.reshape(nt, hp * wp, tp * p * p * c)

    diff = np.empty_like(flat)
    diff[0] = 0.0
    diff[1:] = flat[1:] - flat[:-1]

    feats = np.concatenate([flat, diff], axis=-1).reshape(nt * hp * wp, -1)
    proj = _projection(feats.shape[1], embed_dim, seed)
    return feats @ proj


def encode_clips(clips: Iterable, tok: TokenizerSpec, embed_dim: int,
                 seed: int = 0) -> List[np.ndarray]:
    """Embed several clips with one shared (frozen) projection."""
    return [encode_stub(clip, tok, embed_dim, seed) for clip in clips]
