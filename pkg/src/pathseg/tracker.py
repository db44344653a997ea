"""Outer refinement loop: solve paths, grow positives, retrain, merge, repeat.

One direction runs until the set of superpixels covered by the found paths
stops changing (or the iteration cap is hit). Each round augments the
positive training set with the path superpixels, retrains the foreground
model and the similarity metric, rebuilds all edge costs, and fuses each
path's tracklet chain into a single tracklet so the graph shrinks. The final
labeling is the union of the forward and backward runs.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

from .config import Config, StreamFactory
from .errors import InternalError
from .features import FeatureTable
from .flow import FlowField
from .flowgraph import (
    FlowGraph,
    GraphContext,
    Tracklet,
    build_graph,
    rebuild_graph,
)
from .foreground import (
    SampleSplit,
    augment_positives,
    predict_objectness,
    split_samples,
    train_forest,
)
from .ksp import PathSet, solve_ksp, verify_path_structure, verify_unit_flow
from .lfda import fit_lfda
from .motion import HoofTable, hoof
from .sequence import ImageSequence, PointAnnotations, Segmentation, segmentation_from_ids
from .superpixels import SuperpixelMap


@dataclass(frozen=True)
class PipelineInputs:
    """Preprocessed inputs shared by both tracking directions."""

    seq: ImageSequence
    sp: SuperpixelMap
    flow: FlowField
    feats: FeatureTable
    hoof: HoofTable
    pts: PointAnnotations

    def reversed(self) -> "PipelineInputs":
        """Time-reversed view: frame order flipped, flow negated, motion
        histograms recomputed on the reversed pairs."""
        rev_sp = self.sp.reversed()
        rev_flow = self.flow.reversed()
        return PipelineInputs(
            seq=self.seq.reversed(),
            sp=rev_sp,
            flow=rev_flow,
            feats=self.feats.reversed(),
            hoof=hoof(rev_flow, rev_sp, self.hoof.bins),
            pts=self.pts.reversed(),
        )


@dataclass
class IterationRecord:
    iteration: int
    n_paths: int
    total_cost: float
    phi: int
    edge_count: int
    merged: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "iteration": self.iteration,
                "k": self.n_paths,
                "total_cost": self.total_cost,
                "phi": self.phi,
                "edge_count": self.edge_count,
                "merged": self.merged,
            }
        )


@dataclass
class TrackerState:
    """Per-direction loop state and diagnostics."""

    direction: str
    iterations: list[IterationRecord] = field(default_factory=list)
    split: SampleSplit | None = None

    @property
    def phi_history(self) -> list[int]:
        return [r.phi for r in self.iterations]

    @property
    def edge_counts(self) -> list[int]:
        return [r.edge_count for r in self.iterations]


@dataclass(frozen=True)
class DirectionResult:
    paths: PathSet
    segmentation: Segmentation
    state: TrackerState


@dataclass(frozen=True)
class BidirectionalResult:
    forward: DirectionResult
    backward: DirectionResult
    segmentation: Segmentation


def temporal_merge(g: FlowGraph, paths: PathSet) -> FlowGraph:
    """Fuse each path's tracklet chain into one tracklet and rebuild.

    The merged tracklet's edge cost is the sum of its member tracklet costs
    plus the transition costs along the chain (under the graph's current
    models). Entrance edges attach at the chain's first superpixel, incoming
    transitions target the first, outgoing ones leave from the last, so no
    edge reaches a chain interior.
    """
    if g.tracklets is None or g.context is None:
        raise ValueError("temporal_merge needs a pipeline graph with a registry")
    merged: list[Tracklet] = []
    used: set[tuple[int, int]] = set()
    for path in paths.paths:
        members: list[tuple[int, int]] = []
        for e in path:
            # edge ids refer to the path set's own (working) graph
            members.extend(paths.graph.superpixels_of_edge(e))
        if members:
            merged.append(Tracklet(tuple(members)))
            used.update(members)
    # paths occupy whole tracklets, so surviving registry entries are either
    # fully absorbed into a merged chain or untouched
    registry = tuple(merged) + tuple(
        tr for tr in g.tracklets if not used.intersection(tr.members)
    )
    return rebuild_graph(g, registry=registry)


def refresh_costs(
    g: FlowGraph,
    split: SampleSplit,
    feats: FeatureTable,
    hoof_table: HoofTable,
    cfg: Config,
    streams: StreamFactory,
    iteration: int,
) -> FlowGraph:
    """Retrain the foreground model and metric on the augmented split and
    rebuild every edge cost (registry unchanged)."""
    if g.context is None:
        raise ValueError("refresh_costs needs a pipeline graph with context")
    forest = train_forest(split, feats, cfg, streams, iteration)
    rho = predict_objectness(forest, feats)
    lfda_model = fit_lfda(feats, rho, cfg, streams.lfda(iteration))
    ctx = replace(
        g.context,
        feats=feats, hoof=hoof_table, rho=rho, lfda=lfda_model, forest=forest, cfg=cfg,
    )
    return rebuild_graph(g, context=ctx)


def run_direction(
    inputs: PipelineInputs,
    cfg: Config,
    direction: str = "forward",
) -> DirectionResult:
    """One full tracking run in a single time direction.

    Backward runs reverse the inputs up front and map the resulting frame
    indices back at the end, so both directions share the same loop.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    oriented = inputs if direction == "forward" else inputs.reversed()
    streams = StreamFactory(cfg.rng_seed, 0 if direction == "forward" else 1)
    state = TrackerState(direction)

    split = split_samples(oriented.sp, oriented.pts)
    forest = train_forest(split, oriented.feats, cfg, streams, iteration=0)
    rho = predict_objectness(forest, oriented.feats)
    lfda_model = fit_lfda(oriented.feats, rho, cfg, streams.lfda(0))
    g = build_graph(
        oriented.sp, oriented.feats, oriented.hoof, rho, lfda_model,
        oriented.pts, cfg, direction, forest=forest,
    )

    paths = PathSet((), (), 0.0, g)
    prev_phi = 0
    for it in range(cfg.max_outer_iters):
        solved = solve_ksp(g, cfg.l_max)
        verify_unit_flow(solved.graph, solved)
        verify_path_structure(solved.graph, solved)
        phi = solved.phi()
        merged_any = any(
            len(solved.graph.superpixels_of_edge(e)) > 1 for p in solved.paths for e in p
        )
        state.iterations.append(
            IterationRecord(it, len(solved), solved.total_cost, phi, g.n_edges, merged_any)
        )
        paths = solved
        if phi == prev_phi:
            break
        split = augment_positives(split, solved.superpixels())
        g = refresh_costs(g, split, oriented.feats, oriented.hoof, cfg, streams, it + 1)
        g = temporal_merge(g, solved)
        prev_phi = phi
    state.split = split

    if len(paths) == 0:
        warnings.warn(f"{direction} pass found no paths; returning an empty segmentation")
    ids_per_frame: list[set[int]] = [set() for _ in range(oriented.sp.n_frames)]
    for frame, n in paths.superpixels():
        ids_per_frame[frame].add(n)
    if direction == "backward":
        ids_per_frame = ids_per_frame[::-1]
    seg = segmentation_from_ids(inputs.sp, ids_per_frame)
    return DirectionResult(paths, seg, state)


def run_bidirectional(inputs: PipelineInputs, cfg: Config) -> BidirectionalResult:
    """Forward and backward runs; the labeling is the union of both."""
    fwd = run_direction(inputs, cfg, "forward")
    bwd = run_direction(inputs, cfg, "backward")
    return BidirectionalResult(fwd, bwd, fwd.segmentation.union(bwd.segmentation))
