"""Per-superpixel feature extraction from a trained autoencoder.

The deepest 512-channel representation is computed per frame, upscaled back
to the original image size with bicubic interpolation, and averaged over
each superpixel's pixels.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from .model import FEATURE_DIM, Autoencoder, model_input_size


@torch.no_grad()
def extract_features(
    model: Autoencoder,
    frames: np.ndarray,
    labels_per_frame: list[np.ndarray],
) -> list[np.ndarray]:
    """Per frame: (N_t, 512) mean deep features per superpixel."""
    t, h, w, c = frames.shape
    if len(labels_per_frame) != t:
        raise ValueError(f"{len(labels_per_frame)} label grids for {t} frames")
    if c != model.in_channels:
        raise ValueError(f"model expects {model.in_channels} channels, frames have {c}")
    model.eval()
    mh, mw = model_input_size(h, w)
    out = []
    for i in range(t):
        grid = labels_per_frame[i]
        if grid.shape != (h, w):
            raise ValueError(f"label grid {i} shape {grid.shape} != frame {(h, w)}")
        x = torch.from_numpy(frames[i].transpose(2, 0, 1)[None].copy())
        x = F.interpolate(x, size=(mh, mw), mode="bilinear", align_corners=False)
        deep = model.encode(x)  # (1, 512, mh/16, mw/16)
        full = F.interpolate(deep, size=(h, w), mode="bicubic", align_corners=False)
        feat = full[0].numpy().reshape(FEATURE_DIM, -1).T  # (H*W, 512)
        flat = grid.ravel()
        n = int(flat.max()) + 1
        sums = np.zeros((n, FEATURE_DIM), dtype=np.float64)
        np.add.at(sums, flat, feat)
        counts = np.bincount(flat, minlength=n).astype(np.float64)
        out.append((sums / counts[:, None]).astype(np.float32))
    return out
