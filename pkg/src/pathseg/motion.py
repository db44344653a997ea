"""Oriented-flow histograms per superpixel and their intersection similarity.

Flow vector angles are folded about the vertical axis (leftward motion is
mirrored to rightward) so the histogram is contrast-direction invariant,
then binned uniformly over [-pi/2, pi/2] weighted by flow magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .flow import FlowField
from .superpixels import SuperpixelMap


@dataclass(frozen=True)
class HoofTable:
    """(frame, superpixel) -> L1-normalized orientation histogram."""

    histograms: tuple[np.ndarray, ...]  # per frame: (N_t, bins)

    def __post_init__(self) -> None:
        hists = []
        for t, h in enumerate(self.histograms):
            h = np.asarray(h, dtype=np.float64)
            sums = h.sum(axis=1)
            if h.min() < 0 or np.abs(sums - 1.0).max() > 1e-9:
                raise InputError(f"frame {t} histograms are not probability vectors")
            h.setflags(write=False)
            hists.append(h)
        object.__setattr__(self, "histograms", tuple(hists))

    @property
    def bins(self) -> int:
        return self.histograms[0].shape[1]

    def histogram(self, frame: int, superpixel: int) -> np.ndarray:
        return self.histograms[frame][superpixel]


def fold_angles(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Angles in [-pi/2, pi/2] after mirroring leftward vectors about vertical."""
    theta = np.arctan2(dy, dx)
    theta = np.where(theta > np.pi / 2, np.pi - theta, theta)
    theta = np.where(theta < -np.pi / 2, -np.pi - theta, theta)
    return theta


def hoof(flow: FlowField, sp: SuperpixelMap, bins: int) -> HoofTable:
    """Magnitude-weighted orientation histogram of every superpixel.

    A superpixel with zero total flow magnitude gets the uniform histogram.
    The field attached to a frame is its outgoing one; the last frame reuses
    the final field.
    """
    if bins < 2:
        raise InputError(f"bins must be >= 2, got {bins}")
    per_frame = []
    for t in range(sp.n_frames):
        field = flow.frame_field(t)
        dx = field[..., 0].astype(np.float64).ravel()
        dy = field[..., 1].astype(np.float64).ravel()
        mag = np.sqrt(dx * dx + dy * dy)
        theta = fold_angles(dx, dy)
        bin_ids = np.floor((theta + np.pi / 2) / np.pi * bins).astype(np.int64)
        np.clip(bin_ids, 0, bins - 1, out=bin_ids)
        labels = sp.labels[t].ravel().astype(np.int64)
        n = sp.counts_per_frame[t]
        flat = labels * bins + bin_ids
        hist = np.bincount(flat, weights=mag, minlength=n * bins).reshape(n, bins)
        totals = hist.sum(axis=1, keepdims=True)
        zero = totals[:, 0] == 0
        with np.errstate(invalid="ignore", divide="ignore"):
            hist = hist / totals
        hist[zero] = 1.0 / bins
        per_frame.append(hist)
    return HoofTable(tuple(per_frame))


def histogram_intersection(u: np.ndarray, v: np.ndarray) -> float:
    """Sum of bin-wise minima of two L1-normalized histograms; in [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise InputError(f"histogram bin counts differ: {u.shape} vs {v.shape}")
    return float(np.minimum(u, v).sum())


def intersection_matrix(hists_a: np.ndarray, hists_b: np.ndarray) -> np.ndarray:
    """Pairwise histogram intersections: (len(a), len(b)) matrix."""
    return np.minimum(hists_a[:, None, :], hists_b[None, :, :]).sum(axis=2)
