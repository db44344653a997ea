import numpy as np
import pytest


def textured_fixture(n_frames=6, h=48, w=48, noise_seed=0):
    """Object and background carry equally hard textures (same frequency,
    different orientation); one center annotation per frame."""
    rng = np.random.default_rng(noise_seed)
    yy, xx = np.mgrid[0:h, 0:w]
    cx, cy = w // 2, h // 2
    frames, pts = [], {}
    for i in range(n_frames):
        bg = 0.5 + 0.35 * np.sin(2 * np.pi * (xx + 5 * i) / 8.0)
        obj = 0.5 + 0.35 * np.sin(2 * np.pi * (yy + 3 * i) / 8.0)
        obj_mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= (min(h, w) / 4.8) ** 2
        f = np.where(obj_mask, obj, bg) + rng.normal(0, 0.01, (h, w))
        frames.append(np.clip(f, 0, 1))
        pts[i] = [(float(cx), float(cy))]
    return np.stack(frames).astype(np.float32)[..., None], pts


def block_labels(n_frames, h, w, block=8):
    """Regular grid superpixels for extraction tests."""
    yy, xx = np.mgrid[0:h, 0:w]
    grid = (yy // block) * (w // block) + (xx // block)
    return [grid.astype(np.int64) for _ in range(n_frames)]


@pytest.fixture(scope="session")
def trained_model():
    """One short training run shared by the expensive tests."""
    from iosfeat import TrainConfig, train_autoencoder

    frames, pts = textured_fixture()
    cfg = TrainConfig(epochs=2, iters_per_epoch=30, batch_size=6, seed=1, sigma=0.15)
    model, history = train_autoencoder(frames, pts, cfg)
    return model, history, frames, pts, cfg
