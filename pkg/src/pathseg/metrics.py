"""Segmentation quality metrics.

Scores are micro-averaged: pixel-level true/false positives and negatives
are pooled over all frames before computing precision, recall and F1, so
the report carries one headline number per sequence. When a per-superpixel
objectness table is available, a precision/recall curve over 256 evenly
spaced thresholds is included (the best-threshold variant of the pipeline).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .foreground import ObjectnessTable
from .sequence import Segmentation
from .superpixels import SuperpixelMap

PR_CURVE_STEPS = 256


@dataclass(frozen=True)
class FrameScore:
    frame: int
    f1: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class PrSample:
    threshold: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    f1: float
    precision: float
    recall: float
    per_frame: tuple[FrameScore, ...]
    pr_curve: tuple[PrSample, ...] = ()

    def best_f1(self) -> float:
        """Best F1 over the threshold sweep (falls back to the plain F1)."""
        if not self.pr_curve:
            return self.f1
        return max(s.f1 for s in self.pr_curve)

    def to_json_lines(self) -> str:
        lines = [
            json.dumps(
                {
                    "kind": "pooled",
                    "f1": self.f1,
                    "precision": self.precision,
                    "recall": self.recall,
                }
            )
        ]
        for fs in self.per_frame:
            lines.append(
                json.dumps(
                    {
                        "kind": "frame",
                        "frame": fs.frame,
                        "f1": fs.f1,
                        "precision": fs.precision,
                        "recall": fs.recall,
                        "tp": fs.tp,
                        "fp": fs.fp,
                        "fn": fs.fn,
                    }
                )
            )
        for s in self.pr_curve:
            lines.append(
                json.dumps(
                    {
                        "kind": "pr_sample",
                        "threshold": s.threshold,
                        "precision": s.precision,
                        "recall": s.recall,
                        "f1": s.f1,
                    }
                )
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["scope,frame,f1,precision,recall"]
        rows.append(f"pooled,,{self.f1!r},{self.precision!r},{self.recall!r}")
        for fs in self.per_frame:
            rows.append(f"frame,{fs.frame},{fs.f1!r},{fs.precision!r},{fs.recall!r}")
        return "\n".join(rows) + "\n"


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _counts(pred: np.ndarray, gt: np.ndarray) -> tuple[int, int, int]:
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return tp, fp, fn


def compute_metrics(
    pred: Segmentation | np.ndarray,
    gt: np.ndarray,
    rho: ObjectnessTable | None = None,
    sp: SuperpixelMap | None = None,
) -> MetricsReport:
    """Pooled and per-frame precision/recall/F1 of binary masks against truth.

    ``pred`` is a Segmentation or a (T, H, W) bool array. Passing ``rho`` and
    ``sp`` adds the threshold-sweep precision/recall curve.
    """
    masks = pred.masks if isinstance(pred, Segmentation) else np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if masks.shape != gt.shape:
        raise InputError(f"prediction shape {masks.shape} != ground truth {gt.shape}")
    per_frame = []
    for t in range(masks.shape[0]):
        tp, fp, fn = _counts(masks[t], gt[t])
        p, r, f1 = _prf(tp, fp, fn)
        per_frame.append(FrameScore(t, f1, p, r, tp, fp, fn))
    tp, fp, fn = _counts(masks, gt)
    p, r, f1 = _prf(tp, fp, fn)
    curve: tuple[PrSample, ...] = ()
    if rho is not None and sp is not None:
        curve = tuple(pr_curve(rho, sp, gt))
    return MetricsReport(f1, p, r, tuple(per_frame), curve)


def pr_curve(
    rho: ObjectnessTable,
    sp: SuperpixelMap,
    gt: np.ndarray,
    steps: int = PR_CURVE_STEPS,
) -> list[PrSample]:
    """Precision/recall over masks thresholded at ``steps`` even levels of
    the per-superpixel objectness."""
    gt = np.asarray(gt, dtype=bool)
    if gt.shape != (sp.n_frames, sp.height, sp.width):
        raise InputError("ground truth shape does not match the superpixel map")
    rho_maps = np.stack(
        [rho.values[t][sp.labels[t]] for t in range(sp.n_frames)]
    )
    samples = []
    for threshold in np.linspace(0.0, 1.0, steps):
        pred = rho_maps >= threshold
        tp, fp, fn = _counts(pred, gt)
        p, r, f1 = _prf(tp, fp, fn)
        samples.append(PrSample(float(threshold), p, r, f1))
    return samples
