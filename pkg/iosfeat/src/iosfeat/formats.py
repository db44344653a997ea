"""Wire formats shared with the segmentation pipeline.

SPLM (superpixel labels, read): magic "SPLM", little-endian u32 T, W, H,
then T*H*W u32 labels row-major, frame-major. Labels are re-indexed per
frame to contiguous 0..N-1 in ascending original order, mirroring the
consumer's semantics.

FEAT (per-superpixel features, written): magic "FEAT", u32 record_count,
u32 dim, then records (u32 frame, u32 superpixel_id, dim x f32).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np


class FormatError(ValueError):
    pass


def read_splm(path: str | Path) -> list[np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != b"SPLM":
        raise FormatError(f"bad magic {data[:4]!r}, expected b'SPLM'")
    t, w, h = struct.unpack("<III", data[4:16])
    expected = 16 + t * h * w * 4
    if len(data) != expected:
        raise FormatError(f"SPLM payload is {len(data)} bytes, expected {expected}")
    raw = np.frombuffer(data, dtype="<u4", offset=16).reshape(t, h, w)
    frames = []
    for i in range(t):
        _, inverse = np.unique(raw[i], return_inverse=True)
        frames.append(inverse.reshape(h, w).astype(np.int64))
    return frames


def write_feat(path: str | Path, per_frame_features: list[np.ndarray]) -> None:
    """One record per (frame, superpixel); features stored as f32."""
    dim = per_frame_features[0].shape[1]
    total = sum(m.shape[0] for m in per_frame_features)
    chunks = [b"FEAT" + struct.pack("<II", total, dim)]
    for t, mat in enumerate(per_frame_features):
        if mat.shape[1] != dim:
            raise FormatError(f"frame {t} feature dim {mat.shape[1]} != {dim}")
        rec = np.zeros((mat.shape[0], 2 + dim), dtype="<u4")
        rec[:, 0] = t
        rec[:, 1] = np.arange(mat.shape[0], dtype="<u4")
        rec[:, 2:] = mat.astype("<f4").view("<u4")
        chunks.append(rec.tobytes())
    Path(path).write_bytes(b"".join(chunks))
