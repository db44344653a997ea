"""Per-frame superpixel partitions.

Each frame is partitioned into contiguous superpixels labeled 0..N_t-1.
Temporal coherence is not required here; it is recovered by the transition
edges of the tracking graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from skimage.segmentation import slic as _skimage_slic

from .errors import InputError, InternalError
from .sequence import ImageSequence


@dataclass(frozen=True)
class SuperpixelMap:
    """Label grids plus per-superpixel centroids and pixel counts.

    ``labels``: tuple of (H, W) int32 grids, values contiguous 0..N_t-1.
    ``centroids``: tuple of (N_t, 2) float64 arrays in (x, y) pixel coords.
    ``counts``: tuple of (N_t,) int64 pixel counts.
    """

    labels: tuple[np.ndarray, ...]
    centroids: tuple[np.ndarray, ...] = field(default=None)
    counts: tuple[np.ndarray, ...] = field(default=None)

    def __post_init__(self) -> None:
        grids = []
        shape = None
        for t, grid in enumerate(self.labels):
            grid = np.ascontiguousarray(grid, dtype=np.int32)
            if grid.ndim != 2:
                raise InputError(f"label grid {t} must be 2-D, got shape {grid.shape}")
            if shape is None:
                shape = grid.shape
            elif grid.shape != shape:
                raise InputError(f"label grid {t} has shape {grid.shape}, expected {shape}")
            n = int(grid.max()) + 1
            present = np.bincount(grid.ravel(), minlength=n)
            if grid.min() < 0 or (present == 0).any():
                raise InputError(f"labels in frame {t} are not contiguous 0..N-1")
            grid.setflags(write=False)
            grids.append(grid)
        object.__setattr__(self, "labels", tuple(grids))
        centroids, counts = [], []
        for grid in grids:
            c, n = _centroids_and_counts(grid)
            centroids.append(c)
            counts.append(n)
        object.__setattr__(self, "centroids", tuple(centroids))
        object.__setattr__(self, "counts", tuple(counts))

    @property
    def n_frames(self) -> int:
        return len(self.labels)

    @property
    def height(self) -> int:
        return self.labels[0].shape[0]

    @property
    def width(self) -> int:
        return self.labels[0].shape[1]

    @property
    def counts_per_frame(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.counts)

    def superpixel_at(self, frame: int, x: float, y: float) -> int:
        """Id of the superpixel whose pixel set contains point (x, y)."""
        return int(self.labels[frame][int(y), int(x)])

    def all_ids(self) -> list[tuple[int, int]]:
        """All (frame, id) pairs in deterministic order."""
        return [(t, n) for t in range(self.n_frames) for n in range(self.counts_per_frame[t])]

    def reversed(self) -> "SuperpixelMap":
        return SuperpixelMap(tuple(self.labels[::-1]))


def _centroids_and_counts(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h, w = grid.shape
    n = int(grid.max()) + 1
    flat = grid.ravel()
    counts = np.bincount(flat, minlength=n)
    ys, xs = np.divmod(np.arange(h * w), w)
    cx = np.bincount(flat, weights=xs, minlength=n) / counts
    cy = np.bincount(flat, weights=ys, minlength=n) / counts
    return np.column_stack([cx, cy]), counts.astype(np.int64)


def default_compactness(channels: int) -> float:
    """SLIC compactness matched to the value range the segmenter sees.

    RGB input is converted to Lab internally (range ~100), single-channel
    stays in [0, 1], so the balance factor differs by two orders of magnitude.
    """
    return 10.0 if channels == 3 else 0.1


def slic_superpixels(
    seq: ImageSequence,
    target_count: int,
    compactness: float | None = None,
    rng: np.random.Generator | None = None,
) -> SuperpixelMap:
    """Partition every frame into roughly ``target_count`` connected superpixels.

    The segmentation is deterministic; ``rng`` is accepted for interface
    symmetry with the other stages but unused (grid-seeded k-means has no
    random element).
    """
    del rng
    if target_count < 1:
        raise InputError(f"target_count must be >= 1, got {target_count}")
    if target_count > seq.width * seq.height:
        raise InputError("target_count exceeds pixel count")
    if compactness is None:
        compactness = default_compactness(seq.channels)
    grids = []
    for t in range(seq.n_frames):
        frame = seq.frames[t]
        if seq.channels == 1:
            labels = _skimage_slic(
                frame[..., 0].astype(np.float64), n_segments=target_count,
                compactness=compactness, start_label=0, channel_axis=None,
            )
        else:
            labels = _skimage_slic(
                frame.astype(np.float64), n_segments=target_count,
                compactness=compactness, start_label=0, channel_axis=-1,
            )
        labels = _relabel_contiguous(labels)
        n = int(labels.max()) + 1
        if not (0.5 * target_count <= n <= 2.0 * target_count) and target_count > 4:
            raise InternalError(
                f"superpixel count {n} in frame {t} outside [0.5, 2]x target {target_count}"
            )
        grids.append(labels)
    return SuperpixelMap(tuple(grids))


def _relabel_contiguous(grid: np.ndarray) -> np.ndarray:
    """Remap arbitrary non-negative labels to 0..N-1, ordered by original value."""
    uniq, inverse = np.unique(grid, return_inverse=True)
    del uniq
    return inverse.reshape(grid.shape).astype(np.int32)


def ingest_superpixels(labels_per_frame: list[np.ndarray], seq: ImageSequence) -> SuperpixelMap:
    """Adopt externally computed label grids, re-indexing to contiguous ids.

    Non-contiguous labels are remapped (preserving regions), never rejected;
    dimension mismatches are errors.
    """
    if len(labels_per_frame) != seq.n_frames:
        raise InputError(
            f"superpixel file has {len(labels_per_frame)} frames, sequence has {seq.n_frames}"
        )
    grids = []
    for t, grid in enumerate(labels_per_frame):
        grid = np.asarray(grid)
        if grid.shape != (seq.height, seq.width):
            raise InputError(
                f"superpixel frame {t} has shape {grid.shape[1]}x{grid.shape[0]}, "
                f"expected {seq.width}x{seq.height}"
            )
        if grid.min() < 0:
            raise InputError(f"superpixel frame {t} contains negative labels")
        grids.append(_relabel_contiguous(grid))
    return SuperpixelMap(tuple(grids))
