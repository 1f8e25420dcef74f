"""Exact oracles and baselines: nearest-center assignment, exhaustive sparse
coding, brute-force k-means and Lloyd's algorithm."""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Optional

import numpy as np

from ..numerics import (
    ArrayLike,
    CapExceeded,
    DimensionError,
    DiscreteSparseCode,
    FactorPair,
    KMeansAssignment,
    SparseCode,
    as_array,
    one_hot,
    pinv,
)

DEFAULT_CAP = 2_000_000


def sq_distances(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``n x k`` squared distances computed from explicit differences."""
    out = np.empty((A.shape[0], C.shape[0]))
    for j in range(C.shape[0]):
        diff = A - C[j]
        out[:, j] = np.einsum("id,id->i", diff, diff)
    return out


def nearest(A: np.ndarray, C: np.ndarray):
    """Labels (ties to the lowest index) and squared distance to the chosen center."""
    dist = sq_distances(A, C)
    labels = np.argmin(dist, axis=1)
    return labels, dist[np.arange(A.shape[0]), labels]


def assign_kmeans(A: ArrayLike, C) -> FactorPair:
    """Assign every row to its nearest center in squared l2."""
    a = as_array(A)
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    if C.shape[1] != a.shape[1]:
        raise DimensionError(f"centers have dimension {C.shape[1]}, A has {a.shape[1]}")
    labels, _ = nearest(a, C)
    return FactorPair.build(a, one_hot(labels, C.shape[0]), C, KMeansAssignment())


# -- sparse coding ----------------------------------------------------------


def discrete_codes(r: int, dmax: int) -> np.ndarray:
    """All integer vectors in ``[-dmax, dmax]^r`` in lexicographic order."""
    return np.array(list(itertools.product(range(-dmax, dmax + 1), repeat=r)), dtype=np.float64).reshape(-1, r)


def sparse_code(A: ArrayLike, D, r: int, dmax: Optional[int] = None, cap: float = DEFAULT_CAP) -> FactorPair:
    """Best ``r``-sparse code for every row against a fixed dictionary.

    Every support of size ``r`` is tried. Continuous mode solves least squares
    on the support; discrete mode enumerates integer coefficients in
    ``[-dmax, dmax]``. Ties go to the earliest support (lexicographic) and,
    within it, the earliest code.
    """
    a = as_array(A)
    D = np.atleast_2d(np.asarray(D, dtype=np.float64))
    k = D.shape[0]
    if D.shape[1] != a.shape[1]:
        raise DimensionError(f"dictionary has dimension {D.shape[1]}, A has {a.shape[1]}")
    if not 1 <= r <= k:
        raise ValueError(f"need 1 <= r <= k, got r={r}, k={k}")
    supports = list(itertools.combinations(range(k), r))
    if dmax is not None:
        budget = (2 * dmax + 1) ** r * len(supports)
        if budget > cap:
            raise CapExceeded("discrete sparse coding", budget, cap)
        codes = discrete_codes(r, dmax)
    n = a.shape[0]
    best = np.full(n, np.inf)
    X = np.zeros((n, k))
    for S in supports:
        DS = D[list(S)]
        if dmax is None:
            coef = a @ pinv(DS)
            res = np.sum((coef @ DS - a) ** 2, axis=1)
        else:
            recon = codes @ DS
            res_all = sq_distances(a, recon)
            pick = np.argmin(res_all, axis=1)
            coef = codes[pick]
            res = res_all[np.arange(n), pick]
        better = res < best
        best[better] = res[better]
        X[better] = 0.0
        X[np.ix_(better, list(S))] = coef[better]
    constraint = SparseCode(r) if dmax is None else DiscreteSparseCode(r, dmax)
    return FactorPair.build(a, X, D, constraint)


# -- brute force k-means ----------------------------------------------------


def canonical_labelings(n: int, k: int, batch: int = 65536) -> Iterator[np.ndarray]:
    """All labelings of ``n`` items into at most ``k`` groups, one per partition.

    Labels appear in order of first use (restricted growth strings), so each
    set partition is produced exactly once. Yields ``(<=batch, n)`` arrays.
    """
    labels = np.zeros((1, min(n, 1)), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        parts, tops = [], []
        for lab in range(k):
            ok = lab <= top + 1
            if np.any(ok):
                block = labels[ok]
                parts.append(np.hstack([block, np.full((block.shape[0], 1), lab, dtype=np.int8)]))
                tops.append(np.maximum(top[ok], lab))
        labels, top = np.vstack(parts), np.concatenate(tops)
    for start in range(0, labels.shape[0], batch):
        yield labels[start:start + batch].astype(np.int64)


def count_partitions(n: int, k: int) -> int:
    """Number of set partitions of ``n`` items into at most ``k`` blocks."""
    # Stirling numbers of the second kind, summed
    S = [[0] * (k + 1) for _ in range(n + 1)]
    S[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, k + 1):
            S[i][j] = j * S[i - 1][j] + S[i - 1][j - 1]
    return sum(S[n][: k + 1])


def labelings_cost(a: np.ndarray, labels: np.ndarray, k: int, weights: Optional[np.ndarray] = None):
    """Weighted k-means cost with centroid centers for a batch of labelings.

    Returns ``(costs, centers)`` with ``centers`` of shape ``(batch, k, d)``;
    empty clusters get a zero center.
    """
    w = np.ones(a.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    Y = (labels[:, :, None] == np.arange(k)[None, None, :]).astype(np.float64) * w[None, :, None]
    sums = np.einsum("bnk,nd->bkd", Y, a)
    mass = Y.sum(axis=1)
    safe = np.where(mass > 0, mass, 1.0)
    centers = sums / safe[:, :, None]
    total = float(np.sum(w * np.sum(a * a, axis=1)))
    costs = total - np.sum(np.sum(sums * centers, axis=2), axis=1)
    return np.maximum(costs, 0.0), centers


def brute_force_kmeans(A: ArrayLike, k: int, cap: float = DEFAULT_CAP) -> FactorPair:
    """Exact k-means optimum by enumerating all partitions into at most ``k`` groups."""
    a = as_array(A)
    n = a.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if float(k) ** n > cap:
        raise CapExceeded("brute-force k-means", float(k) ** n, cap)
    groups = min(k, n)
    best_cost, best_labels = np.inf, None
    for block in canonical_labelings(n, groups):
        costs, _ = labelings_cost(a, block, groups)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost, best_labels = costs[i], block[i]
    X = one_hot(best_labels, k)
    mass = X.sum(axis=0)
    C = (X.T @ a) / np.where(mass > 0, mass, 1.0)[:, None]
    return FactorPair.build(a, X, C, KMeansAssignment(), enumerated=count_partitions(n, groups))


# -- Lloyd ------------------------------------------------------------------


def kmeanspp_init(a: np.ndarray, k: int, rng: np.random.Generator, weights: Optional[np.ndarray] = None) -> np.ndarray:
    n = a.shape[0]
    w = np.ones(n) if weights is None else weights
    first = rng.choice(n, p=w / w.sum())
    centers = [a[first]]
    d2 = np.sum((a - a[first]) ** 2, axis=1)
    for _ in range(1, k):
        mass = w * d2
        total = mass.sum()
        idx = rng.choice(n, p=mass / total) if total > 0 else rng.choice(n, p=w / w.sum())
        centers.append(a[idx])
        d2 = np.minimum(d2, np.sum((a - a[idx]) ** 2, axis=1))
    return np.array(centers)


def _lloyd_once(a, k, rng, weights, max_iter, tol):
    w = np.ones(a.shape[0]) if weights is None else weights
    C = kmeanspp_init(a, k, rng, weights)
    prev = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        labels, d2 = nearest(a, C)
        cost = float(np.sum(w * d2))
        mass = np.bincount(labels, weights=w, minlength=k)
        sums = _group_sums(a, labels, k, w)
        for j in np.flatnonzero(mass == 0):
            # reseed an empty cluster at the currently worst-served point
            far = int(np.argmax(w * d2))
            sums[j], mass[j] = a[far] * 1.0, 1.0
            d2[far] = 0.0
        C = sums / mass[:, None]
        if np.isfinite(prev) and prev - cost <= tol * prev:
            break
        prev = cost
    labels, d2 = nearest(a, C)
    return labels, C, float(np.sum(w * d2)), it


def lloyd(A: ArrayLike, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 200,
          tol: float = 1e-9, weights=None) -> FactorPair:
    """Best of ``restarts`` k-means++-seeded Lloyd runs (weighted if ``weights`` given)."""
    a = as_array(A)
    rng = np.random.default_rng(seed)
    w = None if weights is None else np.asarray(weights, dtype=np.float64)
    best = None
    for _ in range(max(1, restarts)):
        labels, C, cost, it = _lloyd_once(a, k, rng, w, max_iter, tol)
        if best is None or cost < best[2]:
            best = (labels, C, cost, it)
    labels, C, _, it = best
    return FactorPair.build(a, one_hot(labels, k), C, KMeansAssignment(), iterations=it)


def _group_sums(a: np.ndarray, labels: np.ndarray, k: int, w: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-cluster (weighted) row sums as one matrix product."""
    M = np.zeros((k, a.shape[0]))
    M[labels, np.arange(a.shape[0])] = 1.0 if w is None else w
    return M @ a


def exact_centroids(a: np.ndarray, labels: np.ndarray, k: int, fallback: np.ndarray) -> np.ndarray:
    """Cluster means; clusters with no members keep their ``fallback`` row."""
    C = np.array(fallback, dtype=np.float64, copy=True)
    mass = np.bincount(labels, minlength=k).astype(np.float64)
    sums = _group_sums(a, labels, k)
    live = mass > 0
    C[live] = sums[live] / mass[live, None]
    return C


def log_comb(n: int, r: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)
