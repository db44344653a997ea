"""Convolutional autoencoder with a 512-channel bottleneck.

Four levels in each path; every level stacks three 3x3 stride-1
convolutions, each followed by batch norm and ReLU. The encoder halves the
resolution after each level (so inputs are resized to the nearest
width/height divisible by 16), with channels growing 64 -> 128 -> 256 ->
512; the decoder mirrors with bilinear upsampling, and a final 1x1
convolution + sigmoid reconstructs the input range.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

ENCODER_CHANNELS = (64, 128, 256, 512)
FEATURE_DIM = 512


def _level(in_ch: int, out_ch: int) -> nn.Sequential:
    layers = []
    ch = in_ch
    for _ in range(3):
        layers += [
            nn.Conv2d(ch, out_ch, kernel_size=3, stride=1, padding=1),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        ]
        ch = out_ch
    return nn.Sequential(*layers)


class Autoencoder(nn.Module):
    def __init__(self, in_channels: int = 1):
        super().__init__()
        self.in_channels = in_channels
        chans = ENCODER_CHANNELS
        self.enc = nn.ModuleList()
        ch = in_channels
        for out_ch in chans:
            self.enc.append(_level(ch, out_ch))
            ch = out_ch
        self.pool = nn.MaxPool2d(2)
        dec_chans = tuple(reversed(chans[:-1])) + (32,)
        self.dec = nn.ModuleList()
        for out_ch in dec_chans:
            self.dec.append(_level(ch, out_ch))
            ch = out_ch
        self.head = nn.Conv2d(ch, in_channels, kernel_size=1)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """Deepest representation: (B, 512, H/16, W/16)."""
        for level in self.enc:
            x = self.pool(level(x))
        return x

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.encode(x)
        for level in self.dec:
            z = level(F.interpolate(z, scale_factor=2, mode="bilinear", align_corners=False))
        return torch.sigmoid(self.head(z))


def model_input_size(height: int, width: int) -> tuple[int, int]:
    """Nearest height/width divisible by 16 (floor 16)."""
    def snap(v: int) -> int:
        return max(16, int(round(v / 16)) * 16)

    return snap(height), snap(width)


def weighted_reconstruction_loss(
    pred: torch.Tensor, target: torch.Tensor, weights: torch.Tensor
) -> torch.Tensor:
    """Sum over pixels of weight * squared error (channels summed per pixel).

    With unit weights this is exactly the plain summed L2 reconstruction
    loss, term for term.
    """
    per_pixel = ((pred - target) ** 2).sum(dim=1)
    return (weights * per_pixel).sum()
