"""Edge-disjoint K-shortest-paths solver on unit-capacity DAGs.

The solver grows an optimal set of edge-disjoint source->sink paths one at a
time. The first path comes from Bellman-Ford (edge costs may be negative);
every following iteration reverses the edges occupied by the current paths
(negating their costs), rewrites all costs into non-negative reduced form
using the running shortest-path labels, finds one more ("interlacing") path
with Dijkstra, and augments: edges the interlacing path traverses backwards
are cancelled, the rest are added, and the surviving edge set is re-cut into
one more path than before. Iteration stops when the total cost stops
strictly decreasing, so the returned set is the cheapest over all explored
sizes; with non-decreasing marginal path costs that is the global optimum
over all non-empty sizes.

Super-source links are conceptually unlimited: a fresh parallel copy is
materialized whenever all copies into a pseudo-source are occupied, keeping
every edge strictly unit-capacity.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalError
from .flowgraph import ENTRANCE, EXIT, SOURCE_LINK, TRACKLET, TRANSITION, FlowGraph

_TOL = 1e-9


@dataclass(frozen=True)
class PathSet:
    """Edge-disjoint source->sink paths as edge-id sequences over ``graph``."""

    paths: tuple[tuple[int, ...], ...]
    path_costs: tuple[float, ...]
    total_cost: float
    graph: FlowGraph
    trace: tuple[dict, ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return len(self.paths)

    def superpixels(self) -> frozenset[tuple[int, int]]:
        """All (frame, superpixel) pairs covered by any path's tracklet edges."""
        covered = set()
        for path in self.paths:
            for e in path:
                covered.update(self.graph.superpixels_of_edge(e))
        return frozenset(covered)

    def phi(self) -> int:
        """Number of distinct superpixels covered; 0 for the empty set."""
        return len(self.superpixels())


def bellman_ford(g: FlowGraph, source: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Shortest-path labels and predecessor edges; handles negative costs.

    Edges are relaxed in tail order, so on topologically numbered DAGs one
    pass suffices; general graphs iterate to a fixed point (absence of
    negative cycles is the caller's precondition and is verified).
    """
    source = g.source if source is None else source
    dist = np.full(g.n_nodes, np.inf)
    pred = np.full(g.n_nodes, -1, dtype=np.int64)
    dist[source] = 0.0
    order = np.argsort(g.tails, kind="stable")
    tails, heads, costs = g.tails[order], g.heads[order], g.costs[order]
    for _ in range(g.n_nodes):
        changed = False
        for e_sorted, (u, v, c) in enumerate(zip(tails, heads, costs)):
            du = dist[u]
            if du + c < dist[v] - 0.0:
                dist[v] = du + c
                pred[v] = order[e_sorted]
                changed = True
        if not changed:
            return dist, pred
    raise InternalError("negative cycle detected during label computation")


def dijkstra(g: FlowGraph, source: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Shortest paths for non-negative costs (tiny negatives clamped to 0)."""
    source = g.source if source is None else source
    costs = g.costs
    if costs.size and costs.min() < -_TOL:
        raise InternalError(f"negative edge cost {costs.min()} beyond tolerance in dijkstra")
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n_nodes)]
    for e in range(g.n_edges):
        adj[g.tails[e]].append((g.heads[e], e))
    dist = np.full(g.n_nodes, np.inf)
    pred = np.full(g.n_nodes, -1, dtype=np.int64)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(g.n_nodes, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, e in adj[u]:
            if done[v]:
                continue
            c = costs[e]
            if c < 0.0:
                c = 0.0
            nd = d + c
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = e
                heapq.heappush(heap, (nd, v))
    return dist, pred


def extract_path(g: FlowGraph, pred: np.ndarray, target: int | None = None) -> tuple[int, ...]:
    """Edge-id sequence from the source to ``target`` following predecessors."""
    target = g.sink if target is None else target
    edges = []
    v = target
    while v != g.source:
        e = int(pred[v])
        if e < 0:
            raise InternalError(f"no predecessor chain from node {v} back to the source")
        edges.append(e)
        v = int(g.tails[e])
        if len(edges) > g.n_edges:
            raise InternalError("predecessor chain contains a cycle")
    return tuple(reversed(edges))


def reverse_along(g: FlowGraph, paths) -> FlowGraph:
    """Residual graph: edges occupied by ``paths`` flip direction and negate cost.

    ``paths`` is a PathSet or any iterable of edge-id sequences; edge ids are
    preserved, so results map 1:1 back to ``g``.
    """
    occupied = _occupied_set(g, paths)
    out = g.copy()
    if occupied:
        idx = np.fromiter(occupied, dtype=np.int64)
        t = out.tails[idx].copy()
        out.tails[idx] = out.heads[idx]
        out.heads[idx] = t
        out.costs[idx] = -out.costs[idx]
    return out


def _occupied_set(g: FlowGraph, paths) -> set[int]:
    seqs = paths.paths if isinstance(paths, PathSet) else paths
    occupied: set[int] = set()
    for path in seqs:
        for e in path:
            e = int(e)
            if not 0 <= e < g.n_edges:
                raise InternalError(f"path references missing edge {e}")
            if e in occupied:
                raise InternalError(f"edge {e} occupied by two paths")
            occupied.add(e)
    return occupied


def transform_costs(g: FlowGraph, labels: np.ndarray) -> FlowGraph:
    """Reduced costs c + L(u) - L(v); non-negative when labels are valid.

    Edges whose tail is unreachable (label +inf) are dead: no shortest path
    can use them, their reduced cost is set to 0. A reachable tail with an
    unreachable head would mean stale labels and raises.
    """
    out = g.copy()
    lu = labels[g.tails]
    lv = labels[g.heads]
    dead = np.isinf(lu)
    bad = ~dead & np.isinf(lv)
    if bad.any():
        raise InternalError("stale labels: edge from reachable tail to unreachable head")
    with np.errstate(invalid="ignore"):
        reduced = g.costs + lu - lv
    reduced[dead] = 0.0
    if reduced.size and reduced.min() < -_TOL:
        raise InternalError(
            f"reduced cost {reduced.min()} below tolerance; labels are inconsistent"
        )
    out.costs = reduced
    return out


def augment(paths, interlacing, g: FlowGraph) -> list[tuple[int, ...]]:
    """Combine current paths with one interlacing path into one more path.

    Interlacing edges traversed against their original direction cancel the
    corresponding occupied edges; the rest are added. The surviving edge set
    is decomposed by walking successor edges from the source (lowest edge id
    first), which must yield exactly len(paths) + 1 disjoint paths.
    """
    occupied = _occupied_set(g, paths)
    added, cancelled = [], []
    for e in interlacing:
        e = int(e)
        (cancelled if e in occupied else added).append(e)
    kept = (occupied - set(cancelled)) | set(added)

    out_edges: dict[int, list[int]] = {}
    for e in kept:
        out_edges.setdefault(int(g.tails[e]), []).append(e)
    for lst in out_edges.values():
        lst.sort(reverse=True)  # pop() takes the lowest id

    n_expected = (len(paths.paths) if isinstance(paths, PathSet) else len(paths)) + 1
    result = []
    for _ in range(n_expected):
        path = []
        node = g.source
        while node != g.sink:
            lst = out_edges.get(node)
            if not lst:
                raise InternalError(f"path decomposition stuck at node {node}")
            e = lst.pop()
            path.append(e)
            node = int(g.heads[e])
            if len(path) > g.n_edges:
                raise InternalError("path decomposition cycled")
        result.append(tuple(path))
    if any(lst for lst in out_edges.values()):
        raise InternalError("path decomposition left unused edges")
    return result


def _ensure_source_capacity(g: FlowGraph, occupied: set[int]) -> None:
    """Append a parallel zero-cost source link for pseudo-sources whose copies
    are all occupied (source links behave as unlimited-multiplicity edges)."""
    links: dict[int, list[int]] = {}
    for e in range(g.n_edges):
        if g.kinds[e] == SOURCE_LINK:
            links.setdefault(int(g.heads[e]), []).append(e)
    new_heads = [ps for ps, ids in links.items() if all(e in occupied for e in ids)]
    if not new_heads:
        return
    k = len(new_heads)
    g.tails = np.concatenate([g.tails, np.full(k, g.source, dtype=np.int64)])
    g.heads = np.concatenate([g.heads, np.array(sorted(new_heads), dtype=np.int64)])
    g.costs = np.concatenate([g.costs, np.zeros(k)])
    g.kinds = np.concatenate([g.kinds, np.full(k, SOURCE_LINK, dtype=np.int8)])
    if g.edge_tracklet is not None:
        g.edge_tracklet = np.concatenate([g.edge_tracklet, np.full(k, -1, dtype=np.int64)])


def _paths_cost(g: FlowGraph, paths: list[tuple[int, ...]]) -> tuple[list[float], float]:
    costs = [float(sum(g.costs[e] for e in p)) for p in paths]
    return costs, float(sum(costs))


def solve_ksp(g: FlowGraph, l_max: int = 200, collect_trace: bool = False) -> PathSet:
    """Optimal edge-disjoint path set; empty when the sink is unreachable.

    The input graph is not modified; the returned PathSet's edge ids refer to
    ``PathSet.graph``, a working copy that may carry extra source-link copies.
    """
    work = g.copy()
    trace: list[dict] = []

    labels, pred = bellman_ford(work)
    if not np.isfinite(labels[work.sink]):
        return PathSet((), (), 0.0, work, tuple(trace))
    paths = [extract_path(work, pred)]
    path_costs, total = _paths_cost(work, paths)

    while len(paths) < l_max:
        occupied = _occupied_set(work, paths)
        _ensure_source_capacity(work, occupied)
        if len(labels) < work.n_nodes:  # capacity append never adds nodes
            raise InternalError("node count changed during solve")
        residual = reverse_along(work, paths)
        reduced = transform_costs(residual, labels)
        dist, pred = dijkstra(reduced)
        if collect_trace:
            trace.append(_trace_record(residual, reduced, dist, pred))
        if not np.isfinite(dist[work.sink]):
            break
        interlacing = extract_path(reduced, pred)
        candidate = augment(paths, interlacing, work)
        cand_costs, cand_total = _paths_cost(work, candidate)
        if cand_total >= total:
            break
        paths, path_costs, total = candidate, cand_costs, cand_total
        with np.errstate(invalid="ignore"):
            labels = labels + dist
        labels[np.isinf(dist)] = np.inf
        labels[work.source] = 0.0

    verify_unit_flow(work, paths)
    return PathSet(tuple(paths), tuple(path_costs), total, work, tuple(trace))


def _trace_record(residual: FlowGraph, reduced: FlowGraph, dist, pred) -> dict:
    """Per-iteration validation data: reduced-cost floor and the Dijkstra
    path's cost under the pre-transform residual costs vs Bellman-Ford."""
    bf_dist, _ = bellman_ford(residual)
    record = {
        "min_reduced_cost": float(reduced.costs.min()) if reduced.n_edges else 0.0,
        "bf_sink_dist": float(bf_dist[residual.sink]),
        "dijkstra_sink_reachable": bool(np.isfinite(dist[reduced.sink])),
    }
    if record["dijkstra_sink_reachable"]:
        path = extract_path(reduced, pred)
        record["dijkstra_path_cost_original"] = float(sum(residual.costs[e] for e in path))
    return record


def verify_unit_flow(g: FlowGraph, paths) -> None:
    """Check unit capacities, flow conservation and source-to-sink balance.

    Raises InternalError on any violation; a no-op for the empty set.
    """
    seqs = paths.paths if isinstance(paths, PathSet) else paths
    occupied = _occupied_set(g, seqs)  # raises if an edge repeats
    in_deg = np.zeros(g.n_nodes, dtype=np.int64)
    out_deg = np.zeros(g.n_nodes, dtype=np.int64)
    for path in seqs:
        if not path:
            raise InternalError("empty path in path set")
        if int(g.tails[path[0]]) != g.source:
            raise InternalError("path does not start at the source")
        if int(g.heads[path[-1]]) != g.sink:
            raise InternalError("path does not end at the sink")
        for e, e_next in zip(path, path[1:]):
            if int(g.heads[e]) != int(g.tails[e_next]):
                raise InternalError("path edges are not contiguous")
        for e in path:
            out_deg[g.tails[e]] += 1
            in_deg[g.heads[e]] += 1
    internal = np.ones(g.n_nodes, dtype=bool)
    internal[[g.source, g.sink]] = False
    if (in_deg[internal] != out_deg[internal]).any():
        raise InternalError("flow conservation violated at an internal node")
    if out_deg[g.source] != len(seqs) or in_deg[g.sink] != len(seqs):
        raise InternalError("source emission does not match sink absorption")
    del occupied


def verify_path_structure(g: FlowGraph, paths) -> None:
    """Pipeline-shaped paths alternate source-link, entrance, tracklets and
    transitions, and finish with an exit edge."""
    seqs = paths.paths if isinstance(paths, PathSet) else paths
    for path in seqs:
        kinds = [int(g.kinds[e]) for e in path]
        if len(kinds) < 4:
            raise InternalError(f"path too short: kinds {kinds}")
        if kinds[0] != SOURCE_LINK or kinds[1] != ENTRANCE or kinds[-1] != EXIT:
            raise InternalError(f"path does not follow source/entrance/../exit: {kinds}")
        middle = kinds[2:-1]
        expect = TRACKLET
        for k in middle:
            if k != expect:
                raise InternalError(f"tracklet/transition alternation broken: {kinds}")
            expect = TRANSITION if expect == TRACKLET else TRACKLET
        if middle and middle[-1] != TRACKLET:
            raise InternalError(f"path must end its chain on a tracklet edge: {kinds}")
