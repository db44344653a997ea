"""Point-centered weight maps biasing the reconstruction loss.

Each annotated frame gets a Gaussian bump of standard deviation
sigma * max(W, H), evaluated at pixel centers and peak-normalized to 1, so
the weight is maximal at the pixel nearest the annotation and decays
monotonically with distance. Frames without annotations fall back to a
uniform floor weight, keeping them in the loss at reduced influence.
"""

from __future__ import annotations

import numpy as np

UNANNOTATED_FLOOR = 0.1


def gaussian_map(height: int, width: int, x: float, y: float, sigma_px: float) -> np.ndarray:
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    d2 = (xs - x) ** 2 + (ys - y) ** 2
    z = np.exp(-d2 / (2.0 * sigma_px * sigma_px))
    return z / z.max()


def prior_maps(
    height: int,
    width: int,
    n_frames: int,
    points: dict[int, list[tuple[float, float]]],
    sigma: float,
    floor: float = UNANNOTATED_FLOOR,
) -> np.ndarray:
    """(T, H, W) float32 weight maps; multi-point frames take the pixelwise
    maximum of the individual bumps (still peak 1)."""
    sigma_px = sigma * max(width, height)
    maps = np.full((n_frames, height, width), floor, dtype=np.float32)
    for frame, pts in points.items():
        if not pts:
            continue
        z = np.zeros((height, width), dtype=np.float64)
        for x, y in pts:
            z = np.maximum(z, gaussian_map(height, width, x, y, sigma_px))
        maps[frame] = z.astype(np.float32)
    return maps
