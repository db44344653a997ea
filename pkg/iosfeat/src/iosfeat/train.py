"""Training loop for the prior-weighted autoencoder."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .model import Autoencoder, model_input_size, weighted_reconstruction_loss
from .prior import UNANNOTATED_FLOOR, prior_maps


@dataclass
class TrainConfig:
    sigma: float = 0.3            # prior bump spread, normalized by max(W, H)
    floor: float = UNANNOTATED_FLOOR
    epochs: int = 20
    iters_per_epoch: int = 500
    batch_size: int = 4
    learning_rate: float = 1e-3
    seed: int = 0
    uniform_prior: bool = False   # ablation: plain L2 reconstruction


def train_autoencoder(
    frames: np.ndarray,
    points: dict[int, list[tuple[float, float]]],
    cfg: TrainConfig,
) -> tuple[Autoencoder, list[float]]:
    """Train on (T, H, W, C) frames; returns the model and per-epoch losses.

    Deterministic for a fixed seed up to framework limits (CPU kernels).
    """
    if not cfg.uniform_prior and not points:
        raise ValueError("training needs at least one annotated frame")
    t, h, w, c = frames.shape
    torch.manual_seed(cfg.seed)
    model = Autoencoder(in_channels=c)
    model.train()

    mh, mw = model_input_size(h, w)
    images = torch.from_numpy(frames.transpose(0, 3, 1, 2).copy())
    images = torch.nn.functional.interpolate(
        images, size=(mh, mw), mode="bilinear", align_corners=False
    )
    if cfg.uniform_prior:
        weights = torch.ones((t, mh, mw))
    else:
        z = prior_maps(h, w, t, points, cfg.sigma, cfg.floor)
        weights = torch.nn.functional.interpolate(
            torch.from_numpy(z)[:, None], size=(mh, mw), mode="bilinear",
            align_corners=False,
        )[:, 0]

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    sampler = torch.Generator().manual_seed(cfg.seed)
    history = []
    for _epoch in range(cfg.epochs):
        epoch_loss = 0.0
        for _ in range(cfg.iters_per_epoch):
            idx = torch.randint(0, t, (min(cfg.batch_size, t),), generator=sampler)
            batch = images[idx]
            target = batch
            pred = model(batch)
            loss = weighted_reconstruction_loss(pred, target, weights[idx])
            optimizer.zero_grad()
            (loss / batch.shape[0]).backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
        history.append(epoch_loss / cfg.iters_per_epoch)
    return model, history


def save_checkpoint(
    path: str | Path, model: Autoencoder, cfg: TrainConfig, history: list[float]
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "state_dict": model.state_dict(),
            "in_channels": model.in_channels,
            "config": asdict(cfg),
            "loss_history": history,
        },
        path,
    )
    path.with_suffix(path.suffix + ".history.json").write_text(
        json.dumps(history), encoding="utf-8"
    )


def load_checkpoint(path: str | Path) -> tuple[Autoencoder, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    model = Autoencoder(in_channels=payload["in_channels"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload
