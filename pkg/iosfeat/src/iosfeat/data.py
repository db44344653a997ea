"""Sequence frames and point annotations from disk."""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np
from PIL import Image

FRAME_EXTENSIONS = {".png", ".pgm", ".ppm"}


def load_frames(pattern: str | Path) -> np.ndarray:
    """(T, H, W, C) float32 array in [0, 1] from numbered image files."""
    path = Path(pattern)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in FRAME_EXTENSIONS)
    else:
        files = sorted(p for p in Path(path.parent).glob(path.name)
                       if p.suffix.lower() in FRAME_EXTENSIONS)
    if not files:
        raise FileNotFoundError(f"no frames match {pattern}")

    def index_of(p: Path) -> int:
        nums = re.findall(r"\d+", p.stem)
        if not nums:
            raise ValueError(f"frame file {p.name} carries no numeric index")
        return int(nums[-1])

    files.sort(key=index_of)
    frames = []
    for f in files:
        arr = np.asarray(Image.open(f))
        if arr.dtype == np.uint8:
            arr = arr.astype(np.float32) / 255.0
        elif arr.dtype == np.uint16:
            arr = arr.astype(np.float32) / 65535.0
        else:
            arr = arr.astype(np.float32)
        if arr.ndim == 2:
            arr = arr[..., None]
        if arr.shape[2] == 4:
            arr = arr[..., :3]
        frames.append(arr)
    out = np.stack(frames)
    if out.ndim != 4:
        raise ValueError("inconsistent frame shapes")
    return out


def load_points(path: str | Path, n_frames: int) -> dict[int, list[tuple[float, float]]]:
    """frame -> [(x, y), ...] from `frame,x,y` rows (header optional)."""
    points: dict[int, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                frame, x, y = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                if row_no == 1:
                    continue  # header
                raise ValueError(f"bad annotation row {row_no}: {row!r}") from None
            if not 0 <= frame < n_frames:
                raise ValueError(f"row {row_no}: frame {frame} outside [0, {n_frames})")
            points.setdefault(frame, []).append((x, y))
    return points
