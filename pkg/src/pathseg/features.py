"""Per-superpixel appearance features.

A feature table assigns every superpixel one fixed-dimension real vector,
the mean of a per-pixel feature map over the superpixel's pixels. Pixel
features come either from the built-in hand-crafted stack below or from an
externally computed feature file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import InputError
from .flow import FlowField
from .sequence import ImageSequence
from .superpixels import SuperpixelMap


@dataclass(frozen=True)
class FeatureTable:
    """(frame, superpixel) -> feature vector, stored per frame as (N_t, D)."""

    vectors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        mats = []
        dim = None
        for t, m in enumerate(self.vectors):
            m = np.asarray(m, dtype=np.float64)
            if m.ndim != 2:
                raise InputError(f"frame {t} feature matrix must be 2-D")
            if dim is None:
                dim = m.shape[1]
            elif m.shape[1] != dim:
                raise InputError(f"frame {t} feature dim {m.shape[1]} != {dim}")
            if not np.isfinite(m).all():
                raise InputError(f"frame {t} features contain non-finite values")
            m.setflags(write=False)
            mats.append(m)
        object.__setattr__(self, "vectors", tuple(mats))

    @property
    def dim(self) -> int:
        return self.vectors[0].shape[1]

    @property
    def n_frames(self) -> int:
        return len(self.vectors)

    def vector(self, frame: int, superpixel: int) -> np.ndarray:
        return self.vectors[frame][superpixel]

    def stacked(self) -> np.ndarray:
        """All vectors as one (total_superpixels, D) matrix, frame-major."""
        return np.vstack(self.vectors)

    def reversed(self) -> "FeatureTable":
        return FeatureTable(tuple(self.vectors[::-1]))


def aggregate_features(pixel_features: list[np.ndarray], sp: SuperpixelMap) -> FeatureTable:
    """Mean of a per-pixel feature map over every superpixel's pixels.

    ``pixel_features[t]`` must be (H, W, D) at full frame resolution.
    """
    if len(pixel_features) != sp.n_frames:
        raise InputError(
            f"{len(pixel_features)} feature maps for {sp.n_frames} frames"
        )
    out = []
    for t in range(sp.n_frames):
        feat = np.asarray(pixel_features[t], dtype=np.float64)
        if feat.shape[:2] != (sp.height, sp.width):
            raise InputError(
                f"feature map {t} resolution {feat.shape[:2]} != frame {(sp.height, sp.width)}"
            )
        labels = sp.labels[t].ravel()
        n = sp.counts_per_frame[t]
        d = feat.shape[2]
        flat = feat.reshape(-1, d)
        sums = np.zeros((n, d), dtype=np.float64)
        np.add.at(sums, labels, flat)
        out.append(sums / sp.counts[t][:, None])
    return FeatureTable(tuple(out))


def builtin_pixel_features(seq: ImageSequence, flow: FlowField) -> list[np.ndarray]:
    """Hand-crafted per-pixel feature stack, the fallback feature source.

    Channel layout, in order:
      [0..C)    raw color channels
      C         luma blurred at sigma=1 px
      C+1       luma blurred at sigma=3 px
      C+2       luma gradient magnitude (central differences)
      C+3, C+4  normalized pixel position x/(W-1), y/(H-1)
      C+5       flow magnitude (last frame reuses the final field)
    """
    t, h, w = seq.n_frames, seq.height, seq.width
    gray = seq.luma()
    xs = np.arange(w, dtype=np.float64) / (w - 1)
    ys = np.arange(h, dtype=np.float64) / (h - 1)
    pos_x = np.broadcast_to(xs[None, :], (h, w))
    pos_y = np.broadcast_to(ys[:, None], (h, w))
    maps = []
    for i in range(t):
        g = gray[i].astype(np.float64)
        gy, gx = np.gradient(g)
        grad = np.sqrt(gx * gx + gy * gy)
        mag = flow.frame_field(i)
        mag = np.sqrt(mag[..., 0] ** 2 + mag[..., 1] ** 2).astype(np.float64)
        channels = [seq.frames[i, ..., c].astype(np.float64) for c in range(seq.channels)]
        channels += [
            gaussian_filter(g, 1.0),
            gaussian_filter(g, 3.0),
            grad,
            pos_x,
            pos_y,
            mag,
        ]
        maps.append(np.stack(channels, axis=-1))
    return maps


def builtin_feature_dim(channels: int) -> int:
    return channels + 6
