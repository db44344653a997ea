"""Dense optical flow between consecutive frames.

The estimator is a plain single-scale Horn-Schunck solver; any external
dense flow can be ingested instead through the FLOW file format, downstream
stages only depend on the :class:`FlowField` contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from .errors import InputError
from .sequence import ImageSequence

# Horn-Schunck derivative stencils over the 2x2x2 frame cube.
_KX = np.array([[-0.25, 0.25], [-0.25, 0.25]])
_KY = np.array([[-0.25, -0.25], [0.25, 0.25]])
_KT = np.array([[0.25, 0.25], [0.25, 0.25]])
_AVG = np.array([
    [1 / 12, 1 / 6, 1 / 12],
    [1 / 6, 0.0, 1 / 6],
    [1 / 12, 1 / 6, 1 / 12],
])


@dataclass(frozen=True)
class FlowField:
    """Per frame-pair displacement fields, shape (T-1, H, W, 2) float32.

    fields[t, y, x] = (dx, dy): content at (x, y) in frame t appears at
    (x + dx, y + dy) in frame t + 1.
    """

    fields: np.ndarray

    def __post_init__(self) -> None:
        fields = np.asarray(self.fields, dtype=np.float32)
        if fields.ndim != 4 or fields.shape[3] != 2:
            raise InputError(f"flow fields must have shape (T-1, H, W, 2); got {fields.shape}")
        if not np.isfinite(fields).all():
            raise InputError("flow fields contain non-finite values")
        fields.setflags(write=False)
        object.__setattr__(self, "fields", fields)

    @property
    def n_pairs(self) -> int:
        return self.fields.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.fields[..., 0] ** 2 + self.fields[..., 1] ** 2)

    def frame_field(self, t: int) -> np.ndarray:
        """Field attached to frame t: its outgoing field, or the incoming one
        for the last frame (which has no successor)."""
        return self.fields[min(t, self.n_pairs - 1)]

    def reversed(self) -> "FlowField":
        """Flow of the time-reversed sequence: reversed pair order, negated vectors."""
        return FlowField(-self.fields[::-1])


def horn_schunck_pair(
    frame0: np.ndarray, frame1: np.ndarray, alpha: float, iters: int
) -> tuple[np.ndarray, np.ndarray]:
    f0 = frame0.astype(np.float64)
    f1 = frame1.astype(np.float64)
    ex = correlate(f0, _KX, mode="nearest") + correlate(f1, _KX, mode="nearest")
    ey = correlate(f0, _KY, mode="nearest") + correlate(f1, _KY, mode="nearest")
    et = correlate(f1, _KT, mode="nearest") - correlate(f0, _KT, mode="nearest")
    u = np.zeros_like(f0)
    v = np.zeros_like(f0)
    denom = alpha * alpha + ex * ex + ey * ey
    for _ in range(iters):
        u_avg = correlate(u, _AVG, mode="nearest")
        v_avg = correlate(v, _AVG, mode="nearest")
        scale = (ex * u_avg + ey * v_avg + et) / denom
        u = u_avg - ex * scale
        v = v_avg - ey * scale
    return u, v


def horn_schunck_flow(seq: ImageSequence, alpha: float = 0.2, iters: int = 400) -> FlowField:
    """Estimate dense flow for every consecutive frame pair.

    RGB input is reduced to luma first. Deterministic; a static scene yields
    an exactly zero field.
    """
    if alpha <= 0:
        raise InputError(f"alpha must be > 0, got {alpha}")
    if iters < 1:
        raise InputError(f"iters must be >= 1, got {iters}")
    gray = seq.luma()
    t, h, w = gray.shape
    fields = np.zeros((t - 1, h, w, 2), dtype=np.float32)
    for i in range(t - 1):
        u, v = horn_schunck_pair(gray[i], gray[i + 1], alpha, iters)
        fields[i, ..., 0] = u
        fields[i, ..., 1] = v
    return FlowField(fields)
