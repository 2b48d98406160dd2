"""Binary Netpbm readers and writers (PGM/PPM/PBM).

Clips persist as one image per frame: P5 for grayscale frames, P6 for RGB,
P4 for boolean masks (bit 1 marks a road pixel).  Writers emit the canonical
header ``magic\\nwidth height\\nmaxval\\n`` followed by the raster; readers
accept arbitrary whitespace and ``#`` comments, as the format allows.
Only 8-bit maxvals are supported.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "read_pgm", "write_pgm",
    "read_ppm", "write_ppm",
    "read_pbm", "write_pbm",
]

_WHITESPACE = b" \t\r\n\v\f"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in b"\r\n":
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ValueError("truncated netpbm header")
    return data[start:pos], pos


def _read_header(data: bytes, expected_magic: bytes, n_fields: int):
    magic, pos = _next_token(data, 0)
    if magic != expected_magic:
        raise ValueError(f"bad magic {magic!r}, expected {expected_magic!r}")
    values = []
    for _ in range(n_fields):
        tok, pos = _next_token(data, pos)
        values.append(int(tok))
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise ValueError("missing whitespace before raster")
    return values, pos + 1


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError(f"PGM expects a 2-D array, got shape {img.shape}")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    (w, h, maxval), pos = _read_header(data, b"P5", 3)
    if not 0 < maxval < 256:
        raise ValueError(f"unsupported maxval {maxval}")
    raster = data[pos:pos + w * h]
    if len(raster) != w * h:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_ppm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"PPM expects an (H, W, 3) array, got shape {img.shape}")
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    (w, h, maxval), pos = _read_header(data, b"P6", 3)
    if not 0 < maxval < 256:
        raise ValueError(f"unsupported maxval {maxval}")
    raster = data[pos:pos + w * h * 3]
    if len(raster) != w * h * 3:
        raise ValueError("truncated PPM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3).copy()


def write_pbm(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"PBM expects a 2-D array, got shape {mask.shape}")
    h, w = mask.shape
    packed = np.packbits(mask.astype(np.uint8), axis=1)  # MSB first, row-padded
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())


def read_pbm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    (w, h), pos = _read_header(data, b"P4", 2)
    row_bytes = (w + 7) // 8
    raster = data[pos:pos + row_bytes * h]
    if len(raster) != row_bytes * h:
        raise ValueError("truncated PBM raster")
    rows = np.frombuffer(raster, dtype=np.uint8).reshape(h, row_bytes)
    bits = np.unpackbits(rows, axis=1)[:, :w]
    return bits.astype(bool)
