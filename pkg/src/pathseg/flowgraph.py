"""Unit-capacity flow network over superpixel tracklets.

Structure of the directed acyclic graph, in topological order:

  super-source -> per-frame pseudo-sources -> tracklet input/output node
  pairs (interleaved by frame) -> sink

Every edge has capacity one. A tracklet edge (input -> output) carries the
log-odds cost of the tracklet's objectness; transition edges link a tracklet
output to the next frame's tracklet inputs; entrance edges connect a frame's
pseudo-source to tracklets whose first superpixel lies near an annotated
point; exit edges reach the sink at zero cost; super-source links to
pseudo-sources cost zero and are conceptually available in unlimited
multiplicity (the solver materializes parallel copies as needed).

Three pruning rules bound the graph: tracklet edges need objectness >=
tau_rho, transition edges need centroid distance <= radius * max(W, H) and
oriented-flow-histogram intersection >= tau_u, entrance edges need centroid
distance to the annotation <= radius * max(W, H).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import PROB_EPS, Config
from .errors import InputError, InternalError
from .features import FeatureTable
from .foreground import BaggedForest, ObjectnessTable, predict_matrix
from .lfda import LfdaModel, similarity_matrix
from .motion import HoofTable, intersection_matrix
from .sequence import PointAnnotations
from .superpixels import SuperpixelMap

SOURCE_LINK, ENTRANCE, TRACKLET, TRANSITION, EXIT = range(5)
KIND_NAMES = ("source", "entrance", "tracklet", "transition", "exit")
KIND_CODES = {name: code for code, name in enumerate(KIND_NAMES)}


def probability_to_cost(p) -> np.ndarray | float:
    """Negated log-odds -log(p / (1 - p)); negative iff p > 0.5.

    Probabilities are clamped to [1e-6, 1 - 1e-6] first so the cost is finite.
    """
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    out = -np.log(p / (1.0 - p))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Tracklet:
    """Ordered chain of (frame, superpixel) pairs; length 1 before any merge."""

    members: tuple[tuple[int, int], ...]

    @property
    def first(self) -> tuple[int, int]:
        return self.members[0]

    @property
    def last(self) -> tuple[int, int]:
        return self.members[-1]

    @property
    def start_frame(self) -> int:
        return self.members[0][0]

    @property
    def end_frame(self) -> int:
        return self.members[-1][0]


@dataclass(frozen=True)
class GraphContext:
    """Everything needed to (re)build edges for a tracklet registry."""

    sp: SuperpixelMap
    feats: FeatureTable
    hoof: HoofTable
    rho: ObjectnessTable
    lfda: LfdaModel
    pts: PointAnnotations
    cfg: Config
    forest: BaggedForest | None = None


@dataclass
class FlowGraph:
    """Edge-list DAG; bare solver graphs carry no tracklet registry/context."""

    n_nodes: int
    source: int
    sink: int
    tails: np.ndarray
    heads: np.ndarray
    costs: np.ndarray
    kinds: np.ndarray
    direction: str = "forward"
    # surviving tracklets; pruning is permanent within a run, so the pool only
    # shrinks (or consolidates into chains) across iterations and the edge
    # count never grows
    tracklets: tuple[Tracklet, ...] | None = None
    edge_tracklet: np.ndarray | None = None  # edge id -> tracklet index, -1 otherwise
    pseudo_sources: dict[int, int] = field(default_factory=dict)  # node id -> frame
    context: GraphContext | None = field(default=None, repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.tails)

    def copy(self) -> "FlowGraph":
        return replace(
            self,
            tails=self.tails.copy(),
            heads=self.heads.copy(),
            costs=self.costs.copy(),
            kinds=self.kinds.copy(),
            edge_tracklet=None if self.edge_tracklet is None else self.edge_tracklet.copy(),
            pseudo_sources=dict(self.pseudo_sources),
        )

    def superpixels_of_edge(self, edge_id: int) -> tuple[tuple[int, int], ...]:
        if self.kinds[edge_id] != TRACKLET or self.edge_tracklet is None:
            return ()
        return self.tracklets[self.edge_tracklet[edge_id]].members

    def validate_acyclic(self) -> None:
        order = topological_order(self)
        if order is None:
            raise InputError("graph contains a cycle")


def topological_order(g: FlowGraph) -> np.ndarray | None:
    """Kahn's algorithm; None if the graph has a cycle."""
    indeg = np.zeros(g.n_nodes, dtype=np.int64)
    np.add.at(indeg, g.heads, 1)
    out_adj: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for e in range(g.n_edges):
        out_adj[g.tails[e]].append(g.heads[e])
    stack = sorted(np.flatnonzero(indeg == 0).tolist(), reverse=True)
    order = []
    while stack:
        u = stack.pop()
        order.append(u)
        for v in out_adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    if len(order) != g.n_nodes:
        return None
    return np.array(order, dtype=np.int64)


def singleton_registry(sp: SuperpixelMap) -> tuple[Tracklet, ...]:
    return tuple(Tracklet((pair,)) for pair in sp.all_ids())


def build_graph(
    sp: SuperpixelMap,
    feats: FeatureTable,
    hoof: HoofTable,
    rho: ObjectnessTable,
    lfda: LfdaModel,
    pts: PointAnnotations,
    cfg: Config,
    direction: str = "forward",
    registry: tuple[Tracklet, ...] | None = None,
    forest: BaggedForest | None = None,
    _include_pruned_at: float | None = None,
) -> FlowGraph:
    """Assemble the tracking DAG for one time direction.

    Inputs must already be oriented for ``direction`` (the tracker reverses
    sequences for the backward pass); the flag is recorded on the graph.
    ``_include_pruned_at`` is a testing hook that keeps pruned edges at the
    given cost instead of dropping them.
    """
    context = GraphContext(sp, feats, hoof, rho, lfda, pts, cfg, forest)
    if registry is None:
        registry = singleton_registry(sp)
    return _build_from_registry(registry, context, direction, _include_pruned_at)


def rebuild_graph(
    g: FlowGraph,
    context: GraphContext | None = None,
    registry: tuple[Tracklet, ...] | None = None,
) -> FlowGraph:
    if g.context is None or g.tracklets is None:
        raise InternalError("cannot rebuild a bare graph (no registry/context)")
    return _build_from_registry(
        registry if registry is not None else g.tracklets,
        context if context is not None else g.context,
        g.direction,
        None,
    )


def _chain_cost(tracklet: Tracklet, ctx: GraphContext, proj: list[np.ndarray]) -> float:
    """Objectness log-odds summed over members plus internal transition costs."""
    cost = 0.0
    for frame, n in tracklet.members:
        cost += probability_to_cost(ctx.rho.value(frame, n))
    for (fa, na), (fb, nb) in zip(tracklet.members, tracklet.members[1:]):
        d = proj[fa][na] - proj[fb][nb]
        a = math.exp(-float((d * d).sum()))
        cost += probability_to_cost(a)
    return cost


def _chain_objectness(tracklet: Tracklet, ctx: GraphContext) -> float:
    """Pruning objectness: plain value for singletons, forest on the mean
    feature of the member chain for merged tracklets."""
    if len(tracklet.members) == 1:
        frame, n = tracklet.members[0]
        return ctx.rho.value(frame, n)
    mean_feat = np.mean([ctx.feats.vector(f, n) for f, n in tracklet.members], axis=0)
    if ctx.forest is None:
        raise InternalError("merged tracklets need the trained forest for pruning")
    return float(predict_matrix(ctx.forest, mean_feat[None, :])[0])


def _build_from_registry(
    registry: tuple[Tracklet, ...],
    ctx: GraphContext,
    direction: str,
    include_pruned_at: float | None,
) -> FlowGraph:
    sp, cfg = ctx.sp, ctx.cfg
    radius_px = cfg.radius * max(sp.width, sp.height)
    proj = [ctx.lfda.project(m) for m in ctx.feats.vectors]

    keep: list[tuple[Tracklet, float, bool]] = []  # (tracklet, cost, surviving)
    for tr in registry:
        surviving = _chain_objectness(tr, ctx) >= cfg.tau_rho
        if surviving or include_pruned_at is not None:
            keep.append((tr, _chain_cost(tr, ctx, proj), surviving))
    # deterministic order: by (start frame, first superpixel, length)
    keep.sort(key=lambda item: (item[0].start_frame, item[0].first[1], len(item[0].members)))

    per_frame_points = ctx.pts.per_frame()
    annotated_frames = [t for t in range(sp.n_frames) if per_frame_points[t]]

    # node ids: source, pseudo-sources (ascending frame), tracklet node pairs, sink
    source = 0
    pseudo_of_frame = {}
    node = 1
    for t in annotated_frames:
        pseudo_of_frame[t] = node
        node += 1
    v_node = np.empty(len(keep), dtype=np.int64)
    w_node = np.empty(len(keep), dtype=np.int64)
    for i, (tr, _, _) in enumerate(keep):
        v_node[i] = node
        w_node[i] = node + 1
        node += 2
    sink = node
    n_nodes = node + 1

    tails: list[int] = []
    heads: list[int] = []
    costs: list[float] = []
    kinds: list[int] = []
    edge_tracklet: list[int] = []

    def add_edge(u: int, v: int, cost: float, kind: int, tracklet_idx: int = -1) -> None:
        tails.append(u)
        heads.append(v)
        costs.append(float(cost))
        kinds.append(kind)
        edge_tracklet.append(tracklet_idx)

    for t in annotated_frames:
        add_edge(source, pseudo_of_frame[t], 0.0, SOURCE_LINK)

    # tracklets grouped by start/end frame for the transition sweep
    starts_by_frame: dict[int, list[int]] = {}
    ends_by_frame: dict[int, list[int]] = {}
    for i, (tr, cost, surviving) in enumerate(keep):
        starts_by_frame.setdefault(tr.start_frame, []).append(i)
        ends_by_frame.setdefault(tr.end_frame, []).append(i)

    pruned_cost = include_pruned_at

    # entrance edges: tracklets starting at an annotated frame, first member near a point
    n_entrances = 0
    for t in annotated_frames:
        idxs = starts_by_frame.get(t, [])
        if not idxs:
            continue
        firsts = [keep[i][0].first for i in idxs]
        cent = np.array([sp.centroids[f][n] for f, n in firsts])
        fvec = np.array([ctx.feats.vector(f, n) for f, n in firsts])
        for gx, gy in per_frame_points[t]:
            ann_sp = sp.superpixel_at(t, gx, gy)
            ann_feat = ctx.feats.vector(t, ann_sp)[None, :]
            betas = similarity_matrix(ctx.lfda, fvec, ann_feat)[:, 0]
            dist = np.hypot(cent[:, 0] - gx, cent[:, 1] - gy)
            for j, i in enumerate(idxs):
                inside = dist[j] <= radius_px and keep[i][2]
                if inside:
                    add_edge(pseudo_of_frame[t], v_node[i], probability_to_cost(betas[j]), ENTRANCE, -1)
                    n_entrances += 1
                elif pruned_cost is not None:
                    add_edge(pseudo_of_frame[t], v_node[i], pruned_cost, ENTRANCE, -1)

    # tracklet and transition edges, frame by frame
    for i, (tr, cost, surviving) in enumerate(keep):
        add_edge(v_node[i], w_node[i], cost if surviving else pruned_cost, TRACKLET, i)

    for t in range(sp.n_frames - 1):
        end_idx = ends_by_frame.get(t, [])
        start_idx = starts_by_frame.get(t + 1, [])
        if not end_idx or not start_idx:
            continue
        lasts = [keep[i][0].last for i in end_idx]
        firsts = [keep[i][0].first for i in start_idx]
        cent_a = np.array([sp.centroids[f][n] for f, n in lasts])
        cent_b = np.array([sp.centroids[f][n] for f, n in firsts])
        dist = np.hypot(
            cent_a[:, 0:1] - cent_b[None, :, 0], cent_a[:, 1:2] - cent_b[None, :, 1]
        )
        hoof_a = np.array([ctx.hoof.histogram(f, n) for f, n in lasts])
        hoof_b = np.array([ctx.hoof.histogram(f, n) for f, n in firsts])
        inter = intersection_matrix(hoof_a, hoof_b)
        feat_a = np.array([ctx.feats.vector(f, n) for f, n in lasts])
        feat_b = np.array([ctx.feats.vector(f, n) for f, n in firsts])
        alphas = similarity_matrix(ctx.lfda, feat_a, feat_b)
        ok = (dist <= radius_px) & (inter >= cfg.tau_u)
        for a_pos, i in enumerate(end_idx):
            for b_pos, j in enumerate(start_idx):
                if ok[a_pos, b_pos] and keep[i][2] and keep[j][2]:
                    add_edge(
                        w_node[i], v_node[j],
                        probability_to_cost(alphas[a_pos, b_pos]), TRANSITION, -1,
                    )
                elif pruned_cost is not None:
                    add_edge(w_node[i], v_node[j], pruned_cost, TRANSITION, -1)

    for i in range(len(keep)):
        add_edge(w_node[i], sink, 0.0, EXIT, -1)

    if n_entrances == 0:
        raise InputError(
            "no entrance edges survive pruning: no tracklet near any annotated point; "
            "increase radius or lower tau_rho"
        )

    g = FlowGraph(
        n_nodes=n_nodes,
        source=source,
        sink=sink,
        tails=np.array(tails, dtype=np.int64),
        heads=np.array(heads, dtype=np.int64),
        costs=np.array(costs, dtype=np.float64),
        kinds=np.array(kinds, dtype=np.int8),
        direction=direction,
        tracklets=tuple(tr for tr, _, _ in keep),
        edge_tracklet=np.array(edge_tracklet, dtype=np.int64),
        pseudo_sources={node: t for t, node in pseudo_of_frame.items()},
        context=ctx,
    )
    return g


# ---------------------------------------------------------------------------
# Debug dump / parse (also the standalone solver input format)
# ---------------------------------------------------------------------------

def dump_graph(g: FlowGraph) -> str:
    lines = []
    for e in range(g.n_edges):
        lines.append(
            f"edge {KIND_NAMES[g.kinds[e]]} {int(g.tails[e])} {int(g.heads[e])} "
            f"{float(g.costs[e])!r}"
        )
    return "\n".join(lines) + "\n"


def parse_graph_dump(text: str) -> FlowGraph:
    """Rebuild a bare graph from ``edge kind u v cost`` lines.

    The super-source is the common tail of source edges (the unique in-degree
    zero node when none exist); the sink is the common head of exit edges.
    """
    tails, heads, costs, kinds = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5 or parts[0] != "edge":
            raise InputError(f"graph dump line {lineno}: expected 'edge kind u v cost'")
        kind = parts[1]
        if kind not in KIND_CODES:
            raise InputError(f"graph dump line {lineno}: unknown edge kind {kind!r}")
        try:
            u, v, cost = int(parts[2]), int(parts[3]), float(parts[4])
        except ValueError:
            raise InputError(f"graph dump line {lineno}: bad numeric field") from None
        tails.append(u)
        heads.append(v)
        costs.append(cost)
        kinds.append(KIND_CODES[kind])
    if not tails:
        raise InputError("graph dump contains no edges")
    tails = np.array(tails, dtype=np.int64)
    heads = np.array(heads, dtype=np.int64)
    kinds = np.array(kinds, dtype=np.int8)
    n_nodes = int(max(tails.max(), heads.max())) + 1

    src_tails = set(tails[kinds == SOURCE_LINK].tolist())
    if len(src_tails) == 1:
        source = src_tails.pop()
    elif len(src_tails) > 1:
        raise InputError("graph dump has source edges from multiple tails")
    else:
        has_in = np.zeros(n_nodes, dtype=bool)
        has_in[heads] = True
        has_out = np.zeros(n_nodes, dtype=bool)
        has_out[tails] = True
        roots = np.flatnonzero(~has_in & has_out)
        if len(roots) != 1:
            raise InputError("graph dump source is ambiguous")
        source = int(roots[0])
    exit_heads = set(heads[kinds == EXIT].tolist())
    if len(exit_heads) == 1:
        sink = exit_heads.pop()
    elif len(exit_heads) > 1:
        raise InputError("graph dump has exit edges to multiple heads")
    else:
        has_out = np.zeros(n_nodes, dtype=bool)
        has_out[tails] = True
        has_in = np.zeros(n_nodes, dtype=bool)
        has_in[heads] = True
        leaves = np.flatnonzero(has_in & ~has_out)
        if len(leaves) != 1:
            raise InputError("graph dump sink is ambiguous")
        sink = int(leaves[0])

    pseudo = {int(h): i for i, h in enumerate(sorted(set(heads[kinds == SOURCE_LINK].tolist())))}
    g = FlowGraph(
        n_nodes=n_nodes,
        source=source,
        sink=sink,
        tails=tails,
        heads=heads,
        costs=np.array(costs, dtype=np.float64),
        kinds=kinds,
        pseudo_sources=pseudo,
    )
    g.validate_acyclic()
    return g
