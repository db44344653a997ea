"""CLI: train the feature extractor, then emit FEAT files for a sequence."""

from __future__ import annotations

import argparse
import sys

from .data import load_frames, load_points
from .extract import extract_features
from .formats import read_splm, write_feat
from .train import TrainConfig, load_checkpoint, save_checkpoint, train_autoencoder


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ios-features",
        description="Sequence-specific superpixel features from a point-prior autoencoder",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train the autoencoder on a sequence")
    tr.add_argument("--frames", required=True, help="frame glob or directory")
    tr.add_argument("--points", required=True, help="CSV of frame,x,y annotations")
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--sigma", type=float, default=0.3)
    tr.add_argument("--epochs", type=int, default=20)
    tr.add_argument("--iters-per-epoch", type=int, default=500)
    tr.add_argument("--batch-size", type=int, default=4)
    tr.add_argument("--learning-rate", type=float, default=1e-3)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument(
        "--uniform-prior", action="store_true",
        help="ablation: ignore annotations, plain reconstruction loss",
    )

    ex = sub.add_parser("extract", help="write per-superpixel FEAT features")
    ex.add_argument("--ckpt", required=True)
    ex.add_argument("--frames", required=True)
    ex.add_argument("--superpixels", required=True, help="SPLM file")
    ex.add_argument("--out", required=True, help="output .feat path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            frames = load_frames(args.frames)
            points = load_points(args.points, frames.shape[0])
            cfg = TrainConfig(
                sigma=args.sigma,
                epochs=args.epochs,
                iters_per_epoch=args.iters_per_epoch,
                batch_size=args.batch_size,
                learning_rate=args.learning_rate,
                seed=args.seed,
                uniform_prior=args.uniform_prior,
            )
            model, history = train_autoencoder(frames, points, cfg)
            save_checkpoint(args.out, model, cfg, history)
            print(f"trained {cfg.epochs} epochs; final loss {history[-1]:.4f}; saved {args.out}")
            return 0
        if args.command == "extract":
            model, _ = load_checkpoint(args.ckpt)
            frames = load_frames(args.frames)
            labels = read_splm(args.superpixels)
            if len(labels) != frames.shape[0]:
                raise ValueError(
                    f"SPLM has {len(labels)} frames, sequence has {frames.shape[0]}"
                )
            if labels[0].shape != frames.shape[1:3]:
                raise ValueError(
                    f"SPLM grid {labels[0].shape} does not match frames {frames.shape[1:3]}"
                )
            feats = extract_features(model, frames, labels)
            write_feat(args.out, feats)
            total = sum(m.shape[0] for m in feats)
            print(f"wrote {total} records (dim {feats[0].shape[1]}) to {args.out}")
            return 0
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
