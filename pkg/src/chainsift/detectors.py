"""Eight unsupervised anomaly scorers behind one fit/score contract.

All methods fit on a reference matrix and score a target matrix; sign
conventions are normalized so a HIGHER score always means MORE
anomalous, which is what makes contamination thresholding uniform
across methods.

One-class SVM training is quadratic in the reference size, so
references above 5,000 rows are fit on a seeded random subsample; the
substitution is reported in the scores' deviations field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.svm import OneClassSVM

from . import numkit
from .errors import ConfigError, DimensionMismatch, InsufficientReference


class Method(enum.Enum):
    LOF = "LOF"
    KNN = "KNN"
    PCA = "PCA"
    OCSVM = "OCSVM"
    CBLOF = "CBLOF"
    ABOD = "ABOD"
    IFOREST = "IFOREST"
    ELLIPTIC = "ELLIPTIC"


# frozen defaults mirroring the common toolkit settings for each method
_DEFAULT_PARAMS: dict[Method, dict] = {
    Method.LOF: {"k": 20},
    Method.KNN: {"k": 5},
    Method.PCA: {},
    Method.OCSVM: {"nu": 0.5, "gamma": None, "max_reference": 5000},
    Method.CBLOF: {"n_clusters": 8, "alpha": 0.9, "beta": 5.0},
    Method.ABOD: {"k": 10},
    Method.IFOREST: {"n_trees": 100, "subsample": 256},
    Method.ELLIPTIC: {"ridge": 1e-3},
}

WARMUP_METHODS = (Method.IFOREST, Method.ELLIPTIC)


@dataclass(frozen=True)
class DetectorSpec:
    method: Method
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        defaults = _DEFAULT_PARAMS[self.method]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConfigError(
                f"{self.method.value}: unknown params {sorted(unknown)}")
        merged = {**defaults, **self.params}
        object.__setattr__(self, "params", merged)

    def to_dict(self) -> dict:
        return {"method": self.method.value, "params": dict(self.params),
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorSpec":
        return cls(method=Method(d["method"]), params=dict(d.get("params", {})),
                   seed=int(d.get("seed", 0)))


@dataclass(frozen=True)
class AnomalyScores:
    scores: np.ndarray  # higher = more anomalous
    method: DetectorSpec
    deviations: tuple[str, ...] = ()


def _check_inputs(spec, reference, targets, min_reference):
    if reference.ndim != 2 or reference.shape[0] == 0:
        raise InsufficientReference(spec.method.value, max(1, min_reference), 0)
    if reference.shape[0] < min_reference:
        raise InsufficientReference(spec.method.value, min_reference,
                                    reference.shape[0])
    if targets.shape[1] != reference.shape[1]:
        raise DimensionMismatch(
            f"targets dim {targets.shape[1]} != reference dim {reference.shape[1]}")


def _score_knn(reference, targets, k):
    index = numkit.NeighborIndex(reference)
    return index.kth_distances(targets, k), ()


def _score_lof(reference, targets, k):
    """Novelty-style LOF: local reachability densities precomputed on the
    reference, targets scored against them."""
    index = numkit.NeighborIndex(reference)
    ref_ids, ref_d = index.query_batch(reference, k, exclude_self=True)
    k_dist = ref_d[:, -1]  # k-distance of every reference point
    # lrd of reference points: 1 / mean reach-dist to their k neighbors
    reach = np.maximum(ref_d, k_dist[ref_ids])
    ref_lrd = 1.0 / np.maximum(reach.mean(axis=1), 1e-300)
    tgt_ids, tgt_d = index.query_batch(targets, k, exclude_self=False)
    tgt_reach = np.maximum(tgt_d, k_dist[tgt_ids])
    tgt_lrd = 1.0 / np.maximum(tgt_reach.mean(axis=1), 1e-300)
    return ref_lrd[tgt_ids].mean(axis=1) / tgt_lrd, ()


def _score_pca(reference, targets):
    """Sum over components of projection^2 / eigenvalue (Mahalanobis in
    the eigenbasis); near-null directions are dropped."""
    model = numkit.pca_fit(reference)
    tol = 1e-12 * max(float(model.eigenvalues[0]), 1.0)
    keep = model.eigenvalues > tol
    proj = numkit.pca_project(model, targets)[:, keep]
    return (proj**2 / model.eigenvalues[keep]).sum(axis=1), ()


def _score_ocsvm(reference, targets, nu, gamma, max_reference, seed):
    deviations = ()
    if reference.shape[0] > max_reference:
        rng = numkit.seeded_rng(seed)
        pick = rng.choice(reference.shape[0], size=max_reference, replace=False)
        reference = reference[np.sort(pick)]
        deviations = (f"ocsvm reference subsampled to {max_reference} rows",)
    gamma = gamma if gamma is not None else 1.0 / reference.shape[1]
    svm = OneClassSVM(kernel="rbf", nu=nu, gamma=gamma)
    svm.fit(reference)
    return -svm.decision_function(targets), deviations


def _kmeans(points, n_clusters, seed, n_iter=100):
    """Plain Lloyd iterations with seeded k-means++ style init."""
    rng = numkit.seeded_rng(seed)
    n = points.shape[0]
    centers = points[rng.choice(n, size=1)]
    for _ in range(n_clusters - 1):
        d2 = np.min(((points[:, None, :] - centers[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0:
            probs = np.full(n, 1.0 / n)
        else:
            probs = d2 / total
        centers = np.vstack([centers, points[rng.choice(n, p=probs)]])
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(n_iter):
        d2 = ((points[:, None, :] - centers[None]) ** 2).sum(-1)
        new_assign = d2.argmin(axis=1)
        for c in range(n_clusters):
            mask = new_assign == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centers, assign


def _score_cblof(reference, targets, n_clusters, alpha, beta, seed):
    """Distance to the nearest large-cluster centroid.

    Clusters sorted by size descending; the large set is the shortest
    prefix reaching alpha of the mass or ending at a beta-fold size drop.
    """
    centers, assign = _kmeans(reference, n_clusters, seed)
    sizes = np.bincount(assign, minlength=n_clusters)
    order = np.argsort(-sizes, kind="stable")
    sorted_sizes = sizes[order]
    n = reference.shape[0]
    boundary = n_clusters
    cum = 0
    for i, s in enumerate(sorted_sizes):
        cum += s
        if cum >= alpha * n:
            boundary = i + 1
            break
        if i + 1 < n_clusters and sorted_sizes[i + 1] > 0 \
                and s / max(sorted_sizes[i + 1], 1) >= beta:
            boundary = i + 1
            break
    large = centers[order[:boundary]]
    d = np.sqrt(((targets[:, None, :] - large[None]) ** 2).sum(-1))
    return d.min(axis=1), ()


def _score_abod(reference, targets, k):
    """Fast ABOD: negated variance of weighted pairwise cosine angles
    over each target's k nearest reference neighbors."""
    index = numkit.NeighborIndex(reference)
    ids, _ = index.query_batch(targets, k, exclude_self=False)
    scores = np.empty(targets.shape[0])
    for t in range(targets.shape[0]):
        diffs = reference[ids[t]] - targets[t]
        norms2 = np.einsum("ij,ij->i", diffs, diffs)
        dots = diffs @ diffs.T
        denom = norms2[:, None] * norms2[None, :]
        iu = np.triu_indices(len(diffs), 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            angles = dots[iu] / denom[iu]
        angles = angles[np.isfinite(angles)]
        scores[t] = -float(np.var(angles)) if angles.size else 0.0
    return scores, ()


# --- isolation forest --------------------------------------------------------

def _avg_path_length(n) -> float:
    """c(n): average unsuccessful BST search path length."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    h = math.log(n - 1.0) + 0.5772156649015329
    return 2.0 * h - 2.0 * (n - 1.0) / n


@dataclass
class _IsoNode:
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    adjust: float = 0.0  # c(size) at external nodes
    depth: int = 0


def _grow_itree(points, rng, height_limit):
    nodes: list[_IsoNode] = []

    def build(idx, depth) -> int:
        node_id = len(nodes)
        nodes.append(_IsoNode(depth=depth))
        sub = points[idx]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if depth >= height_limit or len(idx) <= 1 or splittable.size == 0:
            nodes[node_id].adjust = _avg_path_length(len(idx))
            return node_id
        f = int(rng.choice(splittable))
        t = float(rng.uniform(lo[f], hi[f]))
        mask = sub[:, f] <= t
        nodes[node_id].feature = f
        nodes[node_id].threshold = t
        nodes[node_id].left = build(idx[mask], depth + 1)
        nodes[node_id].right = build(idx[~mask], depth + 1)
        return node_id

    build(np.arange(points.shape[0]), 0)
    return nodes


def _itree_path_lengths(nodes, X):
    depth = np.zeros(X.shape[0])
    node = np.zeros(X.shape[0], dtype=np.int64)
    features = np.array([n.feature for n in nodes])
    thresholds = np.array([n.threshold for n in nodes])
    lefts = np.array([n.left for n in nodes])
    rights = np.array([n.right for n in nodes])
    adjusts = np.array([n.adjust for n in nodes])
    depths = np.array([n.depth for n in nodes])
    active = features[node] >= 0
    rows = np.arange(X.shape[0])
    while active.any():
        cur = node[active]
        go_left = X[rows[active], features[cur]] <= thresholds[cur]
        node[active] = np.where(go_left, lefts[cur], rights[cur])
        active = features[node] >= 0
    return depths[node] + adjusts[node]


def _score_iforest(reference, targets, n_trees, subsample, seed):
    rng = numkit.seeded_rng(seed)
    n = reference.shape[0]
    psi = min(subsample, n)
    height_limit = math.ceil(math.log2(max(psi, 2)))
    paths = np.zeros(targets.shape[0])
    for _ in range(n_trees):
        idx = rng.choice(n, size=psi, replace=False)
        nodes = _grow_itree(reference[idx], rng, height_limit)
        paths += _itree_path_lengths(nodes, targets)
    expected = paths / n_trees
    return np.power(2.0, -expected / _avg_path_length(psi)), ()


def _score_elliptic(reference, targets, ridge):
    model = numkit.fit_gaussian(reference, ridge=ridge)
    return numkit.mahalanobis_batch(model, targets), ()


_MIN_REFERENCE = {
    Method.KNN: lambda p: p["k"],
    Method.LOF: lambda p: p["k"] + 1,
    Method.ABOD: lambda p: max(p["k"], 2),
    Method.CBLOF: lambda p: p["n_clusters"],
    Method.PCA: lambda p: 2,
    Method.OCSVM: lambda p: 2,
    Method.IFOREST: lambda p: 2,
    Method.ELLIPTIC: lambda p: 2,
}


def fit_score(spec: DetectorSpec, reference, targets) -> AnomalyScores:
    """Fit the detector on reference rows and score the target rows."""
    reference = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    p = spec.params
    _check_inputs(spec, reference, targets, _MIN_REFERENCE[spec.method](p))
    if targets.shape[0] == 0:
        return AnomalyScores(scores=np.zeros(0), method=spec)
    if spec.method is Method.KNN:
        scores, dev = _score_knn(reference, targets, p["k"])
    elif spec.method is Method.LOF:
        scores, dev = _score_lof(reference, targets, p["k"])
    elif spec.method is Method.PCA:
        scores, dev = _score_pca(reference, targets)
    elif spec.method is Method.OCSVM:
        scores, dev = _score_ocsvm(reference, targets, p["nu"], p["gamma"],
                                   p["max_reference"], spec.seed)
    elif spec.method is Method.CBLOF:
        scores, dev = _score_cblof(reference, targets, p["n_clusters"],
                                   p["alpha"], p["beta"], spec.seed)
    elif spec.method is Method.ABOD:
        scores, dev = _score_abod(reference, targets, p["k"])
    elif spec.method is Method.IFOREST:
        scores, dev = _score_iforest(reference, targets, p["n_trees"],
                                     p["subsample"], spec.seed)
    elif spec.method is Method.ELLIPTIC:
        scores, dev = _score_elliptic(reference, targets, p["ridge"])
    else:  # pragma: no cover
        raise ConfigError(f"unhandled method {spec.method}")
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        scores = np.nan_to_num(scores, nan=0.0, posinf=1e308, neginf=-1e308)
    return AnomalyScores(scores=scores, method=spec, deviations=dev)
