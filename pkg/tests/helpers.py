"""Shared test utilities: bare graph construction, random tracking-shaped
DAGs, an exhaustive edge-disjoint path-family oracle, and a hand-controlled
toy pipeline world for graph-construction tests."""

from __future__ import annotations

import itertools

import numpy as np

from pathseg.features import FeatureTable
from pathseg.flowgraph import (
    ENTRANCE,
    EXIT,
    SOURCE_LINK,
    TRACKLET,
    TRANSITION,
    FlowGraph,
)
from pathseg.foreground import ObjectnessTable
from pathseg.lfda import LfdaModel
from pathseg.motion import HoofTable
from pathseg.sequence import PointAnnotations
from pathseg.superpixels import SuperpixelMap


def make_bare_graph(edges, n_nodes, source, sink) -> FlowGraph:
    tails, heads, costs, kinds = zip(*edges)
    return FlowGraph(
        n_nodes=n_nodes,
        source=source,
        sink=sink,
        tails=np.array(tails, dtype=np.int64),
        heads=np.array(heads, dtype=np.int64),
        costs=np.array(costs, dtype=np.float64),
        kinds=np.array(kinds, dtype=np.int8),
    )


def random_tracking_graph(
    rng: np.random.Generator,
    max_frames: int = 4,
    max_tracklets: int = 12,
    max_paths: int = 60,
):
    """Random unit-capacity DAG shaped like a tracking instance.

    Mixed-sign entrance/tracklet/transition costs, zero-cost exits. Regenerates
    until at least one source->sink path exists and the simple-path count stays
    enumerable.
    """
    while True:
        n_frames = int(rng.integers(2, max_frames + 1))
        counts = rng.integers(1, 4, size=n_frames)
        while counts.sum() > max_tracklets:
            counts[rng.integers(0, n_frames)] = max(1, counts[rng.integers(0, n_frames)] - 1)
        node = 1
        pseudo = {}
        annotated = [t for t in range(n_frames) if rng.random() < 0.7]
        if not annotated:
            annotated = [0]
        for t in annotated:
            pseudo[t] = node
            node += 1
        v = {}
        w = {}
        for t in range(n_frames):
            for n in range(counts[t]):
                v[t, n] = node
                w[t, n] = node + 1
                node += 2
        sink = node
        edges = []
        for t in annotated:
            edges.append((0, pseudo[t], 0.0, SOURCE_LINK))
        for t in annotated:
            for n in range(counts[t]):
                if rng.random() < 0.8:
                    edges.append((pseudo[t], v[t, n], float(rng.uniform(-3, 3)), ENTRANCE))
        for t in range(n_frames):
            for n in range(counts[t]):
                edges.append((v[t, n], w[t, n], float(rng.uniform(-3, 1.5)), TRACKLET))
        for t in range(n_frames - 1):
            for m in range(counts[t]):
                for n in range(counts[t + 1]):
                    if rng.random() < 0.6:
                        edges.append((w[t, m], v[t + 1, n], float(rng.uniform(-2, 2)), TRANSITION))
        for t in range(n_frames):
            for n in range(counts[t]):
                edges.append((w[t, n], sink, 0.0, EXIT))
        g = make_bare_graph(edges, sink + 1, 0, sink)
        paths = enumerate_paths(g)
        if paths and len(paths) <= max_paths:
            return g


def enumerate_paths(g: FlowGraph) -> list[tuple[int, ...]]:
    """All simple source->sink paths as edge-id tuples (DFS)."""
    out_edges: dict[int, list[int]] = {}
    for e in range(g.n_edges):
        out_edges.setdefault(int(g.tails[e]), []).append(e)
    for lst in out_edges.values():
        lst.sort()
    paths = []
    stack = [(g.source, [])]
    while stack:
        node, path = stack.pop()
        if node == g.sink:
            paths.append(tuple(path))
            continue
        for e in out_edges.get(node, []):
            stack.append((int(g.heads[e]), path + [e]))
    return paths


def path_cost(g: FlowGraph, path) -> float:
    return float(sum(g.costs[e] for e in path))


def best_family_cost(g: FlowGraph, paths: list[tuple[int, ...]] | None = None) -> float | None:
    """Minimum total cost over all non-empty edge-disjoint path families.

    Source links are shareable (the solver materializes parallel copies), all
    other edges are exclusive. Returns None when no path exists.
    """
    if paths is None:
        paths = enumerate_paths(g)
    if not paths:
        return None
    exclusive = [
        frozenset(e for e in p if g.kinds[e] != SOURCE_LINK) for p in paths
    ]
    costs = [path_cost(g, p) for p in paths]
    best = [min(costs)]

    def recurse(start: int, used: frozenset[int], total: float, size: int) -> None:
        if size > 0 and total < best[0]:
            best[0] = total
        for i in range(start, len(paths)):
            if not (exclusive[i] & used):
                recurse(i + 1, used | exclusive[i], total + costs[i], size + 1)

    recurse(0, frozenset(), 0.0, 0)
    return best[0]


class ToyWorld:
    """Hand-controlled inputs for graph construction: per frame, superpixels
    are vertical strips spanning given column ranges."""

    def __init__(self, spans_per_frame, width, height=4, feature_dim=2):
        self.width = width
        self.height = height
        self.n_frames = len(spans_per_frame)
        grids = []
        for spans in spans_per_frame:
            g = np.zeros((height, width), dtype=np.int32)
            for i, (a, b) in enumerate(spans):
                g[:, a:b] = i
            grids.append(g)
        self.sp = SuperpixelMap(tuple(grids))
        self.feature_dim = feature_dim
        self._feats = [
            np.zeros((n, feature_dim)) for n in self.sp.counts_per_frame
        ]
        self._rho = [np.full(n, 0.9) for n in self.sp.counts_per_frame]
        self._hoof = [np.full((n, 4), 0.25) for n in self.sp.counts_per_frame]
        self.projection = np.zeros((1, feature_dim))
        self.points = []

    def set_feat(self, t, n, vec):
        self._feats[t][n] = vec

    def set_rho(self, t, n, value):
        self._rho[t][n] = value

    def set_hoof(self, t, n, hist):
        self._hoof[t][n] = np.asarray(hist, dtype=float)

    def annotate(self, t, x, y=1.5):
        self.points.append((t, float(x), float(y)))

    @property
    def feats(self):
        return FeatureTable(tuple(m.copy() for m in self._feats))

    @property
    def rho(self):
        return ObjectnessTable(tuple(v.copy() for v in self._rho))

    @property
    def hoof(self):
        return HoofTable(tuple(h.copy() for h in self._hoof))

    @property
    def lfda(self):
        return LfdaModel(self.projection.copy(), np.zeros(self.projection.shape[0]), 1, 1, 5)

    @property
    def pts(self):
        return PointAnnotations(tuple(self.points), self.width, self.height, self.n_frames)

    def build(self, cfg, **kwargs):
        from pathseg.flowgraph import build_graph

        return build_graph(
            self.sp, self.feats, self.hoof, self.rho, self.lfda, self.pts, cfg, **kwargs
        )


def edges_of_kind(g: FlowGraph, kind: int):
    return [e for e in range(g.n_edges) if g.kinds[e] == kind]


def all_families(g: FlowGraph):
    """Yield every non-empty edge-disjoint family (for small cases only)."""
    paths = enumerate_paths(g)
    exclusive = [frozenset(e for e in p if g.kinds[e] != SOURCE_LINK) for p in paths]
    for r in range(1, len(paths) + 1):
        for combo in itertools.combinations(range(len(paths)), r):
            union: set[int] = set()
            ok = True
            for i in combo:
                if exclusive[i] & union:
                    ok = False
                    break
                union |= exclusive[i]
            if ok:
                yield [paths[i] for i in combo]
