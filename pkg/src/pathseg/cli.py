"""Command-line interface.

Subcommands: ``segment`` (full pipeline), ``eval`` (score masks against
ground truth), ``synth`` (generate synthetic sequences), ``graph-solve``
(standalone path solver on a graph dump). Exit codes: 0 success, 2 invalid
input, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .config import Config, load_config, seeded_rng
from .errors import InputError, InternalError
from .features import aggregate_features, builtin_pixel_features
from .flow import horn_schunck_flow
from .flowgraph import dump_graph, parse_graph_dump
from .formats import (
    load_annotations,
    load_feat,
    load_flow,
    load_masks,
    load_sequence,
    load_splm,
    save_annotations,
    save_masks,
    save_sequence,
    write_flow,
    write_splm,
)
from .foreground import predict_objectness, split_samples, train_forest
from .ksp import solve_ksp
from .metrics import compute_metrics
from .motion import hoof
from .render import render_overlay
from .superpixels import slic_superpixels
from .synth import SCENARIOS, corrupt_annotations, synth_sequence
from .tracker import PipelineInputs, run_bidirectional, run_direction


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathseg",
        description="Point-supervised video/volume segmentation by multi-path tracking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="run the full pipeline on a sequence")
    seg.add_argument("--frames", required=True, help="frame glob/dir or multi-page tiff")
    seg.add_argument("--points", required=True, help="CSV of frame,x,y annotations")
    seg.add_argument("--config", default=None, help="config file (defaults otherwise)")
    seg.add_argument("--superpixels", default=None, help="precomputed SPLM file")
    seg.add_argument("--flow", default=None, help="precomputed FLOW file")
    seg.add_argument("--features", default=None, help="precomputed FEAT file")
    seg.add_argument("--out", required=True, help="output directory")
    seg.add_argument(
        "--direction", choices=["both", "forward", "backward"], default="both"
    )
    seg.add_argument("--overlays", action="store_true", help="also write overlay PNGs")
    seg.add_argument("--hs-alpha", type=float, default=0.2)
    seg.add_argument("--hs-iters", type=int, default=400)
    seg.add_argument("--slic-compactness", type=float, default=None)

    ev = sub.add_parser("eval", help="score predicted masks against ground truth")
    ev.add_argument("--pred", required=True, help="predicted mask dir/glob")
    ev.add_argument("--gt", required=True, help="ground-truth mask dir/glob")
    ev.add_argument("--out", default=None, help="report directory (stdout otherwise)")

    sy = sub.add_parser("synth", help="generate a synthetic annotated sequence")
    sy.add_argument("--scenario", required=True, choices=list(SCENARIOS))
    sy.add_argument("--out", required=True)
    sy.add_argument("--frames", type=int, default=40)
    sy.add_argument("--size", default="64x64", help="WxH")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--corrupt-fraction", type=float, default=0.0)
    sy.add_argument(
        "--corrupt-mode", choices=["missing", "background", "ring"], default="background"
    )
    sy.add_argument("--corrupt-distance", type=float, default=0.05)

    gs = sub.add_parser("graph-solve", help="run the path solver on a graph dump")
    gs.add_argument("--graph", required=True, help="text dump: edge kind u v cost")
    gs.add_argument("--l-max", type=int, default=200)
    return parser


def _cmd_segment(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    seq = load_sequence(args.frames)
    pts = load_annotations(args.points, seq.width, seq.height, seq.n_frames)
    if args.superpixels:
        sp = load_splm(args.superpixels, seq)
    else:
        sp = slic_superpixels(
            seq, cfg.n_superpixels_per_frame, args.slic_compactness,
            seeded_rng(cfg.rng_seed, 0),
        )
        (out_dir / "superpixels.splm").write_bytes(write_splm(sp))
    if args.flow:
        flow = load_flow(args.flow, seq)
    else:
        flow = horn_schunck_flow(seq, args.hs_alpha, args.hs_iters)
        (out_dir / "flow.flow").write_bytes(write_flow(flow))
    if args.features:
        feats = load_feat(args.features, sp)
    else:
        feats = aggregate_features(builtin_pixel_features(seq, flow), sp)
    hoof_table = hoof(flow, sp, cfg.hoof_bins)
    inputs = PipelineInputs(seq, sp, flow, feats, hoof_table, pts)

    if args.direction == "both":
        result = run_bidirectional(inputs, cfg)
        seg = result.segmentation
        direction_results = [result.forward, result.backward]
    else:
        single = run_direction(inputs, cfg, args.direction)
        seg = single.segmentation
        direction_results = [single]

    save_masks(seg.masks, out_dir / "masks")
    with open(out_dir / "diagnostics.jsonl", "w", encoding="utf-8") as fh:
        for res in direction_results:
            for record in res.state.iterations:
                fh.write(record.to_json() + "\n")

    # final per-superpixel objectness of a forward-trained model, for
    # threshold sweeps and downstream tooling
    split = split_samples(sp, pts)
    for res in direction_results:
        if res.state.split is not None and res.state.direction == "forward":
            split = res.state.split
    from .config import StreamFactory

    forest = train_forest(split, feats, cfg, StreamFactory(cfg.rng_seed, 0), iteration=0)
    rho = predict_objectness(forest, feats)
    with open(out_dir / "rho_final.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "superpixel", "rho"])
        for t in range(sp.n_frames):
            for n in range(sp.counts_per_frame[t]):
                writer.writerow([t, n, repr(rho.value(t, n))])

    if args.overlays:
        render_overlay(seq, seg, None, out_dir / "overlays")
    print(f"wrote masks for {seq.n_frames} frames to {out_dir / 'masks'}")
    return 0


def _cmd_eval(args) -> int:
    pred = load_masks(args.pred)
    gt = load_masks(args.gt)
    report = compute_metrics(pred, gt)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.jsonl").write_text(report.to_json_lines(), encoding="utf-8")
        (out_dir / "metrics.csv").write_text(report.to_csv(), encoding="utf-8")
    print(
        f"f1={report.f1:.4f} precision={report.precision:.4f} recall={report.recall:.4f}"
    )
    return 0


def _cmd_synth(args) -> int:
    try:
        w, h = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise InputError(f"--size must look like 64x64, got {args.size!r}") from None
    rng = seeded_rng(args.seed, 0)
    synth = synth_sequence(args.scenario, rng, args.frames, w, h)
    pts = synth.pts
    if args.corrupt_fraction > 0:
        pts = corrupt_annotations(
            synth, seeded_rng(args.seed, 1), args.corrupt_fraction,
            args.corrupt_mode, args.corrupt_distance,
        )
    out_dir = Path(args.out)
    save_sequence(synth.seq, out_dir / "frames")
    save_masks(synth.gt_masks, out_dir / "gt")
    save_annotations(pts, out_dir / "points.csv")
    print(f"wrote {args.scenario} sequence ({args.frames} frames, {w}x{h}) to {out_dir}")
    return 0


def _cmd_graph_solve(args) -> int:
    g = parse_graph_dump(Path(args.graph).read_text(encoding="utf-8"))
    pathset = solve_ksp(g, args.l_max)
    print(f"paths {len(pathset)} total_cost {pathset.total_cost!r}")
    for i, (path, cost) in enumerate(zip(pathset.paths, pathset.path_costs)):
        nodes = [int(pathset.graph.tails[path[0]])] + [
            int(pathset.graph.heads[e]) for e in path
        ]
        print(f"path {i} cost {cost!r} nodes {' '.join(map(str, nodes))}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "segment":
            return _cmd_segment(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "graph-solve":
            return _cmd_graph_solve(args)
        parser.error(f"unknown command {args.command!r}")
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
