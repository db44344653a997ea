"""Synthetic sequences with exact ground truth for tests and demos.

Scenarios:
  moving-square   a bright square translating at constant speed
  growing-disc    a disc whose radius ramps up and back down
  branching-blob  a blob splitting into two branches that later rejoin

Each scenario yields frames with mild sensor noise, analytic ground-truth
masks, and one center-ish annotation per frame. Annotations can be corrupted
afterwards: a fraction dropped entirely, or relocated onto the background
(uniformly, or near the object at a fixed normalized distance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import InputError
from .sequence import ImageSequence, PointAnnotations

SCENARIOS = ("moving-square", "growing-disc", "branching-blob")

_FG = 0.75
_BG = 0.25
_NOISE = 0.02


@dataclass(frozen=True)
class SyntheticSequence:
    seq: ImageSequence
    gt_masks: np.ndarray  # (T, H, W) bool
    pts: PointAnnotations


def synth_sequence(
    scenario: str,
    rng: np.random.Generator,
    n_frames: int = 40,
    width: int = 64,
    height: int = 64,
) -> SyntheticSequence:
    if scenario == "moving-square":
        masks, points = _moving_square(n_frames, width, height)
    elif scenario == "growing-disc":
        masks, points = _growing_disc(n_frames, width, height)
    elif scenario == "branching-blob":
        masks, points = _branching_blob(n_frames, width, height)
    else:
        raise InputError(f"unknown scenario {scenario!r}; choose one of {SCENARIOS}")
    frames = np.where(masks, _FG, _BG) + rng.normal(0.0, _NOISE, masks.shape)
    frames = np.clip(frames, 0.0, 1.0).astype(np.float32)
    seq = ImageSequence(frames)
    pts = PointAnnotations(tuple(points), width, height, n_frames)
    return SyntheticSequence(seq, masks, pts)


def _moving_square(t: int, w: int, h: int) -> tuple[np.ndarray, list]:
    side = max(8, min(w, h) // 4)
    y0 = (h - side) // 2
    x_start = max(2, w // 10)
    masks = np.zeros((t, h, w), dtype=bool)
    points = []
    max_x = w - side - 2
    for i in range(t):
        x0 = min(x_start + i, max_x)  # 1 px per frame, clamped inside the frame
        masks[i, y0 : y0 + side, x0 : x0 + side] = True
        points.append((i, x0 + side / 2, y0 + side / 2))
    return masks, points


def _growing_disc(t: int, w: int, h: int) -> tuple[np.ndarray, list]:
    cy, cx = h / 2, w / 2
    r_min, r_max = max(3.0, min(w, h) / 16), min(w, h) / 4.5
    yy, xx = np.mgrid[0:h, 0:w]
    masks = np.zeros((t, h, w), dtype=bool)
    points = []
    for i in range(t):
        r = r_min + (r_max - r_min) * np.sin(np.pi * i / (t - 1))
        masks[i] = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        points.append((i, cx, cy))
    return masks, points


def _branching_blob(t: int, w: int, h: int) -> tuple[np.ndarray, list]:
    cy, cx = h / 2, w / 2
    r = max(4.0, min(w, h) / 9)
    spread = min(w, h) / 4.0
    yy, xx = np.mgrid[0:h, 0:w]
    masks = np.zeros((t, h, w), dtype=bool)
    points = []
    for i in range(t):
        d = spread * np.sin(np.pi * i / (t - 1))
        c1y, c2y = cy - d, cy + d
        m1 = (yy - c1y) ** 2 + (xx - cx) ** 2 <= r * r
        m2 = (yy - c2y) ** 2 + (xx - cx) ** 2 <= r * r
        masks[i] = m1 | m2
        points.append((i, cx, c1y))  # stay on the first branch
    return masks, points


def disc_radius_at(i: int, t: int, w: int, h: int) -> float:
    """Analytic radius ramp of the growing-disc scenario."""
    r_min, r_max = max(3.0, min(w, h) / 16), min(w, h) / 4.5
    return r_min + (r_max - r_min) * np.sin(np.pi * i / (t - 1))


def corrupt_annotations(
    synth: SyntheticSequence,
    rng: np.random.Generator,
    fraction: float,
    mode: str = "background",
    distance: float = 0.05,
) -> PointAnnotations:
    """Corrupt ceil(fraction * T) per-frame annotations.

    'missing' drops them, 'background' relocates them uniformly over
    background pixels, 'ring' relocates them near the object at roughly
    ``distance`` * max(W, H) pixels outside it.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InputError(f"fraction must be in [0, 1], got {fraction}")
    pts = synth.pts
    if fraction == 0.0:
        return pts
    t = pts.n_frames
    n_corrupt = int(np.ceil(fraction * t))
    chosen = set(rng.choice(t, size=n_corrupt, replace=False).tolist())
    out = []
    for frame, x, y in pts.points:
        if frame not in chosen:
            out.append((frame, x, y))
            continue
        if mode == "missing":
            continue
        gt = synth.gt_masks[frame]
        if mode == "background":
            candidates = np.flatnonzero(~gt.ravel())
        elif mode == "ring":
            dist = distance_transform_edt(~gt)
            target = distance * max(pts.width, pts.height)
            band = 1.5
            sel = (dist > 0) & (np.abs(dist - target) <= band)
            while not sel.any():
                band *= 2.0
                sel = (dist > 0) & (np.abs(dist - target) <= band)
            candidates = np.flatnonzero(sel.ravel())
        else:
            raise InputError(f"unknown corruption mode {mode!r}")
        pick = int(rng.choice(candidates))
        py, px = divmod(pick, pts.width)
        out.append((frame, float(px), float(py)))
    return PointAnnotations(tuple(out), pts.width, pts.height, t)
