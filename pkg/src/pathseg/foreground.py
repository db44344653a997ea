"""Transductive foreground model: bagged binary decision trees.

The positive set holds the superpixels containing an annotated point; every
tree is trained on all positives plus an equal number of unlabeled samples
drawn with replacement and treated as negatives. Trees use axis-aligned
threshold splits maximizing Gini impurity decrease over ceil(sqrt(D))
randomly drawn candidate features, grown until pure or out of samples,
with leaves storing the positive fraction. The objectness of a superpixel
is the mean leaf value over all trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config, StreamFactory
from .errors import InputError
from .features import FeatureTable
from .sequence import PointAnnotations
from .superpixels import SuperpixelMap


@dataclass(frozen=True)
class SampleSplit:
    """Disjoint positive/unlabeled (frame, superpixel) id sets covering all superpixels."""

    positives: frozenset[tuple[int, int]]
    unlabeled: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.positives & self.unlabeled:
            raise InputError("positive and unlabeled sets overlap")

    @property
    def n_positive(self) -> int:
        return len(self.positives)


def split_samples(sp: SuperpixelMap, pts: PointAnnotations) -> SampleSplit:
    """Positives are the superpixels whose pixel set contains any annotated point."""
    positives = set()
    for frame, x, y in pts.points:
        positives.add((frame, sp.superpixel_at(frame, x, y)))
    unlabeled = set(sp.all_ids()) - positives
    return SampleSplit(frozenset(positives), frozenset(unlabeled))


def augment_positives(split: SampleSplit, path_superpixels) -> SampleSplit:
    """Move every superpixel traversed by a found path into the positive set.

    ``path_superpixels`` is any iterable of (frame, superpixel) pairs (e.g.
    PathSet.superpixels()). Monotone: positives never shrink.
    """
    new_pos = split.positives | frozenset(path_superpixels)
    return SampleSplit(new_pos, split.unlabeled - new_pos)


@dataclass(frozen=True)
class _Tree:
    """Flattened binary tree; feature -1 marks a leaf, value its positive fraction."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.flatnonzero(internal)
            vals = x[rows, feat[rows]]
            go_left = vals <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]


@dataclass(frozen=True)
class BaggedForest:
    trees: tuple[_Tree, ...]
    feature_dim: int
    # per-tree (frame, superpixel) ids drawn as negatives, for diagnostics
    sampled_negatives: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _gini(pos: np.ndarray, total: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        p = pos / total
    g = 2.0 * p * (1.0 - p)
    return np.where(total > 0, g, 0.0)


def _grow(x: np.ndarray, y: np.ndarray, rng: np.random.Generator, nodes: list) -> int:
    """Append the subtree for samples (x, y); returns its root node index."""
    n, d = x.shape
    pos = int(y.sum())
    node_id = len(nodes)
    nodes.append(None)
    frac = pos / n
    if n < 2 or pos == 0 or pos == n:
        nodes[node_id] = (-1, 0.0, -1, -1, frac)
        return node_id

    n_candidates = int(np.ceil(np.sqrt(d)))
    candidates = np.sort(rng.choice(d, size=min(n_candidates, d), replace=False))
    parent_gini = _gini(np.array(pos, dtype=float), np.array(n, dtype=float))
    best = None  # (decrease, feature, threshold)
    for f in candidates:
        order = np.argsort(x[:, f], kind="stable")
        xv = x[order, f]
        yv = y[order]
        boundary = np.flatnonzero(xv[1:] > xv[:-1])  # split after position i
        if boundary.size == 0:
            continue
        thresholds = 0.5 * (xv[boundary] + xv[boundary + 1])
        # midpoints of adjacent floats can round onto an endpoint; such a
        # threshold cannot separate the two values
        valid = (thresholds > xv[boundary]) & (thresholds < xv[boundary + 1])
        if not valid.any():
            continue
        boundary, thresholds = boundary[valid], thresholds[valid]
        left_n = (boundary + 1).astype(float)
        left_pos = np.cumsum(yv)[boundary].astype(float)
        right_n = n - left_n
        right_pos = pos - left_pos
        weighted = (left_n * _gini(left_pos, left_n) + right_n * _gini(right_pos, right_n)) / n
        decrease = parent_gini - weighted
        i = int(np.argmax(decrease))
        if decrease[i] > 0.0 and (best is None or decrease[i] > best[0]):
            best = (float(decrease[i]), int(f), float(thresholds[i]))

    if best is None:
        nodes[node_id] = (-1, 0.0, -1, -1, frac)
        return node_id
    _, f, thr = best
    mask = x[:, f] <= thr
    left = _grow(x[mask], y[mask], rng, nodes)
    right = _grow(x[~mask], y[~mask], rng, nodes)
    nodes[node_id] = (f, thr, left, right, frac)
    return node_id


def _build_tree(x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> _Tree:
    nodes: list = []
    _grow(x, y, rng, nodes)
    arr = np.array(nodes, dtype=np.float64)
    return _Tree(
        feature=arr[:, 0].astype(np.int64),
        threshold=arr[:, 1],
        left=arr[:, 2].astype(np.int64),
        right=arr[:, 3].astype(np.int64),
        value=arr[:, 4],
    )


def train_forest(
    split: SampleSplit,
    feats: FeatureTable,
    cfg: Config,
    streams: StreamFactory | None = None,
    iteration: int = 0,
) -> BaggedForest:
    """Train the bagging classifier on the current positive/unlabeled split.

    Bootstrap negatives are redrawn per tree and per iteration from distinct
    random streams, so retraining after augmenting positives re-samples the
    shrunken unlabeled pool.
    """
    if split.n_positive < 1:
        raise InputError("positive set is empty; at least one annotation must hit a superpixel")
    if streams is None:
        streams = StreamFactory(cfg.rng_seed)
    pos_ids = sorted(split.positives)
    unl_ids = sorted(split.unlabeled)
    if not unl_ids:
        raise InputError("unlabeled set is empty; nothing to sample negatives from")
    x_pos = np.array([feats.vector(t, n) for t, n in pos_ids])
    x_unl = np.array([feats.vector(t, n) for t, n in unl_ids])
    trees = []
    sampled = []
    n_pos = len(pos_ids)
    for tree_idx in range(cfg.n_trees):
        rng = streams.forest_tree(iteration, tree_idx)
        draw = rng.integers(0, len(unl_ids), size=n_pos)
        x = np.vstack([x_pos, x_unl[draw]])
        y = np.concatenate([np.ones(n_pos, dtype=np.int64), np.zeros(n_pos, dtype=np.int64)])
        trees.append(_build_tree(x, y, rng))
        sampled.append(tuple(unl_ids[i] for i in draw))
    return BaggedForest(tuple(trees), feats.dim, tuple(sampled))


@dataclass(frozen=True)
class ObjectnessTable:
    """(frame, superpixel) -> probability of being part of the object."""

    values: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        vals = []
        for t, v in enumerate(self.values):
            v = np.asarray(v, dtype=np.float64)
            if v.min() < 0 or v.max() > 1:
                raise InputError(f"frame {t} objectness outside [0, 1]")
            v.setflags(write=False)
            vals.append(v)
        object.__setattr__(self, "values", tuple(vals))

    def value(self, frame: int, superpixel: int) -> float:
        return float(self.values[frame][superpixel])

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.values)


def predict_matrix(forest: BaggedForest, x: np.ndarray) -> np.ndarray:
    """Mean leaf positive fraction over all trees for each row of ``x``."""
    if x.shape[1] != forest.feature_dim:
        raise InputError(f"feature dim {x.shape[1]} != forest dim {forest.feature_dim}")
    acc = np.zeros(x.shape[0], dtype=np.float64)
    for tree in forest.trees:
        acc += tree.predict(x)
    return acc / forest.n_trees


def predict_objectness(forest: BaggedForest, feats: FeatureTable) -> ObjectnessTable:
    out = []
    for t in range(feats.n_frames):
        out.append(predict_matrix(forest, feats.vectors[t]))
    return ObjectnessTable(tuple(out))


def dump_forest(forest: BaggedForest) -> str:
    """Human-readable tree dump for debugging; not a stability contract."""
    lines = []
    for i, tree in enumerate(forest.trees):
        lines.append(f"tree {i} nodes {len(tree.feature)}")
        for j in range(len(tree.feature)):
            if tree.feature[j] < 0:
                lines.append(f"  node {j} leaf value {tree.value[j]:.6f}")
            else:
                lines.append(
                    f"  node {j} split f{tree.feature[j]} <= {tree.threshold[j]:.6g} "
                    f"-> {tree.left[j]}, {tree.right[j]}"
                )
    return "\n".join(lines) + "\n"
