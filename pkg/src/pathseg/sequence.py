"""Core domain types: image sequences, point annotations, segmentations.

All types are immutable after construction and safe to share across
concurrent readers. Pixel coordinates are (x=column, y=row) with the origin
at the top-left; normalized distances are relative to max(W, H).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ImageSequence:
    """T frames of H x W pixels with 1 or 3 channels, values in [0, 1].

    ``frames`` has shape (T, H, W, C), dtype float32.
    """

    frames: np.ndarray

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim == 3:
            frames = frames[..., None]
        if frames.ndim != 4:
            raise InputError(f"frames must have shape (T, H, W[, C]); got {frames.shape}")
        t, h, w, c = frames.shape
        if t < 2:
            raise InputError(f"need at least 2 frames, got {t}")
        if c not in (1, 3):
            raise InputError(f"channel count must be 1 or 3, got {c}")
        if h < 2 or w < 2:
            raise InputError(f"frames too small: {h}x{w}")
        lo, hi = float(frames.min()), float(frames.max())
        if lo < 0.0 or hi > 1.0:
            raise InputError(f"pixel values must lie in [0, 1]; got range [{lo}, {hi}]")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def channels(self) -> int:
        return self.frames.shape[3]

    def luma(self) -> np.ndarray:
        """Grayscale view (T, H, W): identity for single-channel, Rec.601 luma for RGB."""
        if self.channels == 1:
            return self.frames[..., 0]
        r, g, b = self.frames[..., 0], self.frames[..., 1], self.frames[..., 2]
        return 0.299 * r + 0.587 * g + 0.114 * b

    def reversed(self) -> "ImageSequence":
        return ImageSequence(self.frames[::-1].copy())


@dataclass(frozen=True)
class PointAnnotations:
    """Per-frame 2D point annotations; frames may carry zero, one or several points.

    ``points`` is a tuple of (frame, x, y); x is the column, y the row.
    """

    points: tuple[tuple[int, float, float], ...]
    width: int
    height: int
    n_frames: int

    def __post_init__(self) -> None:
        normalized = []
        for frame, x, y in self.points:
            frame, x, y = int(frame), float(x), float(y)
            if not 0 <= frame < self.n_frames:
                raise InputError(f"annotation frame {frame} outside [0, {self.n_frames})")
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise InputError(
                    f"annotation ({x}, {y}) at frame {frame} outside image bounds "
                    f"{self.width}x{self.height}"
                )
            normalized.append((frame, x, y))
        object.__setattr__(self, "points", tuple(normalized))

    def per_frame(self) -> list[list[tuple[float, float]]]:
        out: list[list[tuple[float, float]]] = [[] for _ in range(self.n_frames)]
        for frame, x, y in self.points:
            out[frame].append((x, y))
        return out

    @property
    def annotated_frames(self) -> tuple[int, ...]:
        return tuple(sorted({frame for frame, _, _ in self.points}))

    def reversed(self) -> "PointAnnotations":
        points = tuple(
            (self.n_frames - 1 - frame, x, y) for frame, x, y in self.points
        )
        return PointAnnotations(points, self.width, self.height, self.n_frames)


@dataclass(frozen=True)
class Segmentation:
    """Positive superpixel ids per frame plus the derived binary masks."""

    positive_ids: tuple[frozenset[int], ...]
    masks: np.ndarray = field(repr=False)  # (T, H, W) bool

    def __post_init__(self) -> None:
        masks = np.asarray(self.masks, dtype=bool)
        masks.setflags(write=False)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "positive_ids", tuple(frozenset(s) for s in self.positive_ids))

    @property
    def n_frames(self) -> int:
        return len(self.positive_ids)

    def union(self, other: "Segmentation") -> "Segmentation":
        if self.n_frames != other.n_frames or self.masks.shape != other.masks.shape:
            raise InputError("cannot union segmentations over different sequences")
        ids = tuple(a | b for a, b in zip(self.positive_ids, other.positive_ids))
        return Segmentation(ids, self.masks | other.masks)


def segmentation_from_ids(sp, ids_per_frame) -> Segmentation:
    """Build a Segmentation from per-frame positive superpixel id sets.

    ``sp`` is a SuperpixelMap; every id must exist in its frame.
    """
    t = sp.n_frames
    masks = np.zeros((t, sp.height, sp.width), dtype=bool)
    ids_out = []
    for frame in range(t):
        ids = frozenset(int(i) for i in ids_per_frame[frame])
        for i in ids:
            if not 0 <= i < sp.counts_per_frame[frame]:
                raise InputError(f"superpixel id {i} does not exist in frame {frame}")
        if ids:
            masks[frame] = np.isin(sp.labels[frame], sorted(ids))
        ids_out.append(ids)
    return Segmentation(tuple(ids_out), masks)
