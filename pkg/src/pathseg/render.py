"""Overlay rendering: prediction tint plus optional ground-truth contour."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import binary_erosion

from .errors import InputError
from .sequence import ImageSequence, Segmentation

_TINT = np.array([1.0, 0.1, 0.1])
_CONTOUR = np.array([0.1, 1.0, 0.1])
_TINT_WEIGHT = 0.45


def mask_contour(mask: np.ndarray) -> np.ndarray:
    """Boundary pixels of a binary mask (members with a non-member 4-neighbor)."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros_like(mask)
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    return mask & ~binary_erosion(mask, structure=structure, border_value=0)


def overlay_frame(
    frame: np.ndarray, pred: np.ndarray, gt: np.ndarray | None = None
) -> np.ndarray:
    """uint8 RGB overlay: prediction tinted red, truth contour in green."""
    if frame.ndim == 2:
        rgb = np.repeat(frame[..., None], 3, axis=2).astype(np.float64)
    elif frame.shape[2] == 1:
        rgb = np.repeat(frame, 3, axis=2).astype(np.float64)
    else:
        rgb = frame.astype(np.float64)
    pred = np.asarray(pred, dtype=bool)
    if pred.shape != rgb.shape[:2]:
        raise InputError("prediction mask does not match the frame")
    rgb[pred] = (1 - _TINT_WEIGHT) * rgb[pred] + _TINT_WEIGHT * _TINT
    if gt is not None:
        contour = mask_contour(gt)
        rgb[contour] = _CONTOUR
    return np.clip(np.rint(rgb * 255), 0, 255).astype(np.uint8)


def render_overlay(
    seq: ImageSequence,
    seg: Segmentation,
    gt: np.ndarray | None = None,
    out_dir: str | Path = "overlays",
) -> list[Path]:
    """Write one overlay PNG per frame; deterministic bytes for fixed inputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if seg.masks.shape[0] != seq.n_frames:
        raise InputError("segmentation frame count does not match the sequence")
    paths = []
    for t in range(seq.n_frames):
        img = overlay_frame(
            seq.frames[t], seg.masks[t], None if gt is None else gt[t]
        )
        p = out_dir / f"overlay_{t:04d}.png"
        Image.fromarray(img).save(p)
        paths.append(p)
    return paths
