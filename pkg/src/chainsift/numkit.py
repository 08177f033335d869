"""Shared numeric primitives: seeded RNG, exact k-NN, Gaussian models, PCA.

Euclidean distance is the single metric used everywhere. The neighbor
index runs an exact chunked brute-force search (in 166 dimensions a
space-partitioning tree degenerates to a scan anyway); the contract is
exact k-NN with deterministic tie-breaking by ascending point id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DecompositionFailure,
    DimensionMismatch,
    EmptyIndex,
    SingularAfterRidge,
)


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic generator (PCG64): same seed, same stream, any platform."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class KnnResult:
    neighbors: list[tuple[int, float]]  # (point id, distance), ascending distance
    truncated: bool  # True when fewer than k neighbors exist


class NeighborIndex:
    """Exact Euclidean k-NN over a fixed point set.

    Point ids are row indices into the matrix passed at construction.
    """

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] == 0:
            raise EmptyIndex("neighbor index needs a nonempty 2-d point matrix")
        self.points = points
        self._sq_norms = np.einsum("ij,ij->i", points, points)

    def __len__(self) -> int:
        return self.points.shape[0]

    def query_batch(
        self, queries: np.ndarray, k: int, exclude_self: bool = False,
        chunk: int = 1024,
    ) -> tuple[np.ndarray, np.ndarray]:
        """k nearest neighbors for each query row.

        Returns (ids, distances), each of shape (n_queries, k_eff), rows
        sorted ascending by distance, ties by ascending id. With
        exclude_self=True, one exact zero-distance match per query is
        dropped (the query is assumed to be a member of the indexed set).
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if queries.shape[1] != self.points.shape[1]:
            raise DimensionMismatch(
                f"query dim {queries.shape[1]} != index dim {self.points.shape[1]}")
        n = len(self)
        k_eff = min(k, n - 1 if exclude_self else n)
        if k_eff < 1:
            raise EmptyIndex("no neighbors available after self-exclusion")
        all_ids = np.empty((queries.shape[0], k_eff), dtype=np.int64)
        all_d = np.empty((queries.shape[0], k_eff), dtype=np.float64)
        for lo in range(0, queries.shape[0], chunk):
            q = queries[lo:lo + chunk]
            d2 = self._sq_norms[None, :] - 2.0 * (q @ self.points.T)
            d2 += np.einsum("ij,ij->i", q, q)[:, None]
            np.maximum(d2, 0.0, out=d2)
            if exclude_self:
                # mask exactly one identical point per query row; GEMM
                # rounding leaves the self distance near but not at zero
                q_sq = np.einsum("ij,ij->i", q, q)
                for r in range(q.shape[0]):
                    tol = 1e-9 * (q_sq[r] + 1.0)
                    near = np.flatnonzero(d2[r] <= tol)
                    for j in near:
                        if np.array_equal(self.points[j], q[r]):
                            d2[r, j] = np.inf
                            break
            rows = np.arange(q.shape[0])[:, None]
            if k_eff >= n:
                sel = np.tile(np.arange(n), (q.shape[0], 1))
            else:
                sel = np.argpartition(d2, k_eff - 1, axis=1)[:, :k_eff]
            sel_d2 = d2[rows, sel]
            # order the selection by (distance, id)
            sub_order = np.lexsort((sel, sel_d2), axis=1)
            ids = np.take_along_axis(sel, sub_order, axis=1)
            dist2 = np.take_along_axis(sel_d2, sub_order, axis=1)
            if k_eff < n:
                # boundary ties: the partition may have picked a higher id
                # over an equal-distance lower id outside the selection
                pivot = dist2[:, -1]
                ambiguous = np.flatnonzero(
                    (d2 <= pivot[:, None]).sum(axis=1) > k_eff)
                for r in ambiguous:
                    full = np.lexsort((np.arange(n), d2[r]))[:k_eff]
                    ids[r] = full
                    dist2[r] = d2[r, full]
            all_ids[lo:lo + chunk] = ids
            all_d[lo:lo + chunk] = np.sqrt(dist2)
        return all_ids, all_d

    def kth_distances(self, queries: np.ndarray, k: int,
                      exclude_self: bool = False) -> np.ndarray:
        _, d = self.query_batch(queries, k, exclude_self=exclude_self)
        return d[:, -1]


def knn_distances(index: NeighborIndex, query: np.ndarray, k: int) -> KnnResult:
    """k nearest neighbors of one query point, self-match excluded.

    When the query is a member of the indexed set it never appears in
    its own neighbor list. Asking for k >= available neighbors returns
    all of them with truncated=True.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    is_member = bool(np.any(np.all(index.points == query, axis=1)))
    available = len(index) - 1 if is_member else len(index)
    if available < 1:
        raise EmptyIndex("query point is the only indexed point")
    k_eff = min(k, available)
    ids, dists = index.query_batch(query[None, :], k_eff, exclude_self=is_member)
    pairs = [(int(i), float(d)) for i, d in zip(ids[0], dists[0])]
    return KnnResult(neighbors=pairs, truncated=k > available)


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    covariance: np.ndarray  # sample covariance + ridge * I
    precision: np.ndarray
    ridge: float


def fit_gaussian(points: np.ndarray, ridge: float = 0.0) -> GaussianModel:
    """Sample mean/covariance (divisor n-1) with ridge regularization.

    The precision matrix comes from a Cholesky factorization; a failed
    factorization signals the ridge is too small for this point set.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("need at least 2 points")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = (centered.T @ centered) / (points.shape[0] - 1)
    cov = cov + ridge * np.eye(points.shape[1])
    cov = 0.5 * (cov + cov.T)
    try:
        chol = scipy.linalg.cho_factor(cov, lower=True)
        precision = scipy.linalg.cho_solve(chol, np.eye(points.shape[1]))
    except scipy.linalg.LinAlgError as exc:
        raise SingularAfterRidge(f"covariance singular with ridge={ridge}") from exc
    return GaussianModel(mean=mean, covariance=cov,
                         precision=0.5 * (precision + precision.T),
                         ridge=float(ridge))


def mahalanobis(model: GaussianModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.mean.shape:
        raise DimensionMismatch(
            f"point dim {x.shape} != model dim {model.mean.shape}")
    delta = x - model.mean
    q = float(delta @ model.precision @ delta)
    return float(np.sqrt(max(q, 0.0)))


def mahalanobis_batch(model: GaussianModel, xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if xs.shape[1] != model.mean.shape[0]:
        raise DimensionMismatch(
            f"point dim {xs.shape[1]} != model dim {model.mean.shape[0]}")
    delta = xs - model.mean
    q = np.einsum("ij,jk,ik->i", delta, model.precision, delta)
    return np.sqrt(np.maximum(q, 0.0))


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, variance-descending
    eigenvalues: np.ndarray  # nonnegative, descending


def pca_fit(points: np.ndarray) -> PcaModel:
    """Eigendecomposition of the sample covariance.

    Sign convention: the largest-magnitude component of each eigenvector
    is made positive, so repeated fits are byte-identical.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("need at least 2 points")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = (centered.T @ centered) / (points.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    try:
        eigvals, eigvecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(str(exc)) from exc
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    for j in range(eigvecs.shape[1]):
        pivot = np.argmax(np.abs(eigvecs[:, j]))
        if eigvecs[pivot, j] < 0:
            eigvecs[:, j] = -eigvecs[:, j]
    return PcaModel(mean=mean, eigenvectors=eigvecs, eigenvalues=eigvals)


def pca_project(model: PcaModel, xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    return (xs - model.mean) @ model.eigenvectors


def pca_reconstruct(model: PcaModel, proj: np.ndarray) -> np.ndarray:
    return np.atleast_2d(proj) @ model.eigenvectors.T + model.mean
