"""Local Fisher Discriminant Analysis for appearance-similarity metrics.

LFDA learns a linear projection V maximizing local between-class scatter
over within-class scatter, so multimodal classes (an object whose parts look
different) keep their local structure. Training samples are superpixels with
high/low objectness; the learned projection turns feature distances into
transition and entrance probabilities via exp(-||V d||^2).

The class-wise affinity uses local scaling: sigma_i is the distance to the
k-th neighbor, A_ij = exp(-||x_i - x_j||^2 / (sigma_i sigma_j)), zeroed
outside mutual k-nearest-neighborhoods. The generalized eigenproblem
S_b v = lambda S_w v is reduced to a symmetric standard problem through a
Cholesky factor of the (regularized) within scatter, which also scales each
eigenvector to unit S_w-norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import Config
from .errors import InputError
from .features import FeatureTable
from .foreground import ObjectnessTable

_REG_SCALE = 1e-6


@dataclass(frozen=True)
class LfdaModel:
    """Projection matrix (lfda_dims x feature_dim) plus training metadata."""

    projection: np.ndarray
    eigenvalues: np.ndarray
    n_positive: int
    n_negative: int
    knn: int

    def __post_init__(self) -> None:
        v = np.asarray(self.projection, dtype=np.float64)
        if not np.isfinite(v).all():
            raise InputError("projection matrix contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "projection", v)

    @property
    def out_dim(self) -> int:
        return self.projection.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.projection.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.projection.T


def _class_affinity(xc: np.ndarray, k: int) -> np.ndarray:
    """Local-scaling affinity with mutual k-NN support."""
    nc = xc.shape[0]
    diff = xc[:, None, :] - xc[None, :, :]
    dist2 = (diff * diff).sum(axis=2)
    k_eff = min(k, nc - 1)
    order = np.argsort(dist2, axis=1, kind="stable")
    # column k_eff skips self (distance 0 sorts first)
    sigma = np.sqrt(dist2[np.arange(nc), order[:, k_eff]])
    knn_mask = np.zeros((nc, nc), dtype=bool)
    rows = np.repeat(np.arange(nc), k_eff)
    knn_mask[rows, order[:, 1 : k_eff + 1].ravel()] = True
    mutual = knn_mask & knn_mask.T
    scale = np.outer(sigma, sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.exp(-dist2 / scale)
    a[scale == 0] = 0.0
    a[~mutual] = 0.0
    np.fill_diagonal(a, 0.0)
    return a


def local_scatter_matrices(
    x: np.ndarray, y: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Locality-weighted between/within scatter matrices (S_b, S_w).

    Exposed so tests can cross-check the fitted projection against a dense
    generalized eigensolve on the same matrices.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    n, d = x.shape
    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    classes = np.unique(y)
    for c in classes:
        xc = x[y == c]
        nc = xc.shape[0]
        a = _class_affinity(xc, k)
        deg = a.sum(axis=1)
        lap = np.diag(deg) - a  # graph Laplacian: X^T L X = 0.5 sum A_ij (x_i-x_j)(..)^T
        g = xc.T @ lap @ xc
        s_w += g / nc
        s_b += g * (1.0 / n - 1.0 / nc)
    # cross-class pairs, weight 1/n each
    for i, c in enumerate(classes):
        for c2 in classes[i + 1 :]:
            xa, xb = x[y == c], x[y == c2]
            na, nb = xa.shape[0], xb.shape[0]
            sa, sb_ = xa.sum(axis=0), xb.sum(axis=0)
            cross = nb * (xa.T @ xa) + na * (xb.T @ xb) - np.outer(sa, sb_) - np.outer(sb_, sa)
            s_b += cross / n
    s_w = 0.5 * (s_w + s_w.T)
    s_b = 0.5 * (s_b + s_b.T)
    return s_b, s_w


def regularize_within(s_w: np.ndarray) -> np.ndarray:
    d = s_w.shape[0]
    return s_w + np.eye(d) * (_REG_SCALE * np.trace(s_w) / d)


def fit_from_samples(x: np.ndarray, y: np.ndarray, out_dim: int, k: int) -> LfdaModel:
    """Fit the projection from labeled samples (y in {0, 1})."""
    n, d = x.shape
    if out_dim > d:
        raise InputError(f"lfda_dims {out_dim} exceeds feature dim {d}")
    s_b, s_w = local_scatter_matrices(x, y, k)
    s_w_reg = regularize_within(s_w)
    chol = scipy.linalg.cholesky(s_w_reg, lower=True)
    inv_l = scipy.linalg.solve_triangular(chol, np.eye(d), lower=True)
    m = inv_l @ s_b @ inv_l.T
    m = 0.5 * (m + m.T)
    eigvals, eigvecs = scipy.linalg.eigh(m)
    order = np.argsort(eigvals, kind="stable")[::-1][:out_dim]
    vals = eigvals[order]
    vecs = inv_l.T @ eigvecs[:, order]  # v^T S_w_reg v = 1 by construction
    # deterministic sign: largest-magnitude entry of each eigenvector positive
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return LfdaModel(
        projection=vecs.T,
        eigenvalues=vals,
        n_positive=int((y == 1).sum()),
        n_negative=int((y == 0).sum()),
        knn=k,
    )


def fit_lfda(
    feats: FeatureTable,
    rho: ObjectnessTable,
    cfg: Config,
    rng: np.random.Generator,
) -> LfdaModel:
    """Fit LFDA on high- vs low-objectness superpixels.

    Positives are features with objectness above tau_trans; an equal number
    of negatives is drawn uniformly without replacement from the rest.
    """
    x = feats.stacked()
    r = rho.stacked()
    pos_idx = np.flatnonzero(r > cfg.tau_trans)
    cand_idx = np.flatnonzero(r <= cfg.tau_trans)
    need = cfg.lfda_dims + 1
    if len(pos_idx) < need or len(cand_idx) < len(pos_idx):
        raise InputError(
            f"metric learning needs at least {need} samples above tau_trans and as many "
            f"below; got {len(pos_idx)} above / {len(cand_idx)} below. Lower tau_trans "
            f"(currently {cfg.tau_trans})."
        )
    neg_idx = np.sort(rng.choice(cand_idx, size=len(pos_idx), replace=False))
    xs = np.vstack([x[pos_idx], x[neg_idx]])
    ys = np.concatenate([np.ones(len(pos_idx), dtype=int), np.zeros(len(neg_idx), dtype=int)])
    return fit_from_samples(xs, ys, cfg.lfda_dims, cfg.lfda_knn)


def similarity(model: LfdaModel, a: np.ndarray, b: np.ndarray) -> float:
    """exp(-||V (a - b)||^2): 1 iff the projected difference is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.shape[-1] != model.feature_dim:
        raise InputError(
            f"feature dims {a.shape} / {b.shape} do not match projection {model.feature_dim}"
        )
    d = model.project(a - b)
    return float(np.exp(-(d * d).sum()))


def alpha(model: LfdaModel, a_from: np.ndarray, a_to: np.ndarray) -> float:
    """Transition probability between superpixels of consecutive frames."""
    return similarity(model, a_from, a_to)


def beta(model: LfdaModel, a_candidate: np.ndarray, a_annotated: np.ndarray) -> float:
    """Entrance probability of a candidate relative to the annotated superpixel."""
    return similarity(model, a_candidate, a_annotated)


def similarity_matrix(model: LfdaModel, feats_a: np.ndarray, feats_b: np.ndarray) -> np.ndarray:
    """Pairwise exp(-||V(a_i - b_j)||^2), shape (len(a), len(b))."""
    pa = model.project(feats_a)
    pb = model.project(feats_b)
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2)
