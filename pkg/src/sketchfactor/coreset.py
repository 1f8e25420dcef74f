"""Weighted row-subset reductions for k-means and sparse dictionary learning.

Weights multiply squared residuals: a coreset's cost for a candidate is
``sum_i w_i * cost(row_i)``. Sampled indices that repeat are kept as separate
entries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import ArrayLike, Constraint, DiscreteSparseCode, KMeansAssignment, SparseCode, as_array, pinv
from .solvers.oracles import nearest, sparse_code


@dataclass(frozen=True)
class WeightedInstance:
    indices: np.ndarray
    weights: np.ndarray
    Asub: np.ndarray

    def __post_init__(self):
        if not (len(self.indices) == len(self.weights) == self.Asub.shape[0]):
            raise ValueError("indices, weights and rows disagree in length")
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("coreset weights must be finite and positive")

    @property
    def m(self) -> int:
        return len(self.indices)


def _sample(rng, probs, m, base_weights=None):
    idx = rng.choice(probs.size, size=m, replace=True, p=probs)
    w = 1.0 / (m * probs[idx])
    if base_weights is not None:
        w = w * base_weights[idx]
    return idx, w


def lightweight_probabilities(A: ArrayLike, weights=None) -> np.ndarray:
    """``q_i = 1/(2n) + dist(a_i, mean)^2 / (2 sum dist^2)``, mass-weighted when ``weights`` given."""
    a = as_array(A)
    n = a.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    mu = (w @ a) / w.sum()
    d2 = np.sum((a - mu) ** 2, axis=1)
    spread = float(w @ d2)
    if spread <= 0.0:
        return w / w.sum()
    return 0.5 * w / w.sum() + 0.5 * w * d2 / spread


def lightweight_coreset_kmeans(A: ArrayLike, m: int, seed: int, weights=None) -> WeightedInstance:
    """Lightweight coreset: importance sampling by distance to the mean.

    ``weights`` lets the construction run on an already weighted instance, so
    coresets compose.
    """
    a = as_array(A)
    n = a.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    base = None if weights is None else np.asarray(weights, dtype=np.float64)
    q = lightweight_probabilities(a, base)
    idx, w = _sample(np.random.default_rng(seed), q, m, base)
    return WeightedInstance(idx, w, a[idx].copy())


# -- dictionary coreset ----------------------------------------------------


def _subspace_residuals(a: np.ndarray, bases: Sequence[np.ndarray]) -> np.ndarray:
    """``n x len(bases)`` squared distances to linear subspaces (orthonormal rows)."""
    out = np.empty((a.shape[0], len(bases)))
    norms = np.sum(a * a, axis=1)
    for j, B in enumerate(bases):
        proj = a @ B.T
        out[:, j] = np.maximum(norms - np.sum(proj * proj, axis=1), 0.0)
    return out


def _top_basis(rows: np.ndarray, dim: int) -> np.ndarray:
    if rows.shape[0] == 0:
        return np.zeros((0, rows.shape[1]))
    _, s, Vt = np.linalg.svd(rows, full_matrices=False)
    keep = min(dim, int(np.sum(s > 1e-12 * max(s[0], 1e-300))))
    return Vt[:keep]


def projective_clustering(A: ArrayLike, n_subspaces: int, dim: int, seed: int,
                          restarts: int = 5, max_iter: int = 50):
    """Alternating heuristic for ``n_subspaces`` linear subspaces of dimension ``dim``.

    Returns ``(labels, bases, residuals)`` of the best restart.
    """
    a = as_array(A)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        seeds = rng.choice(n, size=min(n, n_subspaces * dim), replace=False)
        bases = [_top_basis(a[chunk], dim) for chunk in np.array_split(seeds, n_subspaces)]
        prev = np.inf
        for _ in range(max_iter):
            res = _subspace_residuals(a, bases)
            labels = np.argmin(res, axis=1)
            cost = float(res[np.arange(n), labels].sum())
            if prev - cost <= 1e-10 * max(prev, 1e-300):
                break
            prev = cost
            bases = [_top_basis(a[labels == j], dim) if np.any(labels == j) else bases[j]
                     for j in range(n_subspaces)]
        res = _subspace_residuals(a, bases)
        labels = np.argmin(res, axis=1)
        dist = res[np.arange(n), labels]
        if best is None or dist.sum() < best[2].sum():
            best = (labels, bases, dist)
    return best


def subspace_sensitivity_bounds(A: ArrayLike, k: int, r: int, seed: int, c: float = 1.0) -> np.ndarray:
    """Per-row sensitivity estimates for the cost of ``C(k, r)`` rank-``r`` subspaces.

    ``min(1, c * (dist_i^2 / cost + lev_i))`` where ``dist_i`` is the distance
    to the row's subspace in a projective-clustering solution and ``lev_i`` is
    the leverage score of the row's projection onto that subspace, computed
    among the projections of its cluster.
    """
    a = as_array(A)
    n_sub = len(list(itertools.combinations(range(k), r)))
    labels, bases, dist = projective_clustering(a, n_sub, r, seed)
    total = float(dist.sum())
    lev = np.zeros(a.shape[0])
    for j in np.unique(labels):
        members = np.flatnonzero(labels == j)
        coords = a[members] @ bases[j].T
        U, s, _ = np.linalg.svd(coords, full_matrices=False) if coords.size else (None, np.zeros(0), None)
        if s.size and s[0] > 0:
            U = U[:, s > 1e-9 * s[0]]
            lev[members] = np.sum(U * U, axis=1)
        else:
            lev[members] = 1.0 / members.size
    dist_term = dist / total if total > 0 else np.zeros_like(dist)
    return np.minimum(1.0, c * (dist_term + lev))


def dictionary_coreset(A: ArrayLike, k: int, r: int, m: int, seed: int, replace: bool = True) -> WeightedInstance:
    """Sensitivity-sampled coreset for r-sparse dictionary costs.

    ``replace=False`` is the exhaustive mode and requires ``m == n``: every row
    is kept once with weight 1.
    """
    a = as_array(A)
    n = a.shape[0]
    if not 1 <= r <= k:
        raise ValueError("need 1 <= r <= k")
    if m > n:
        raise ValueError(f"coreset size {m} exceeds n = {n}")
    if not replace:
        if m != n:
            raise ValueError("exhaustive mode needs m == n")
        return WeightedInstance(np.arange(n), np.ones(n), a.copy())
    if m < k * r:
        raise ValueError(f"coreset size {m} is below k*r = {k * r}")
    sigma = subspace_sensitivity_bounds(a, k, r, seed)
    if sigma.sum() <= 0:
        probs = np.full(n, 1.0 / n)
    else:
        probs = sigma / sigma.sum()
    idx, w = _sample(np.random.default_rng([seed, 1]), probs, m)
    return WeightedInstance(idx, w, a[idx].copy())


# -- evaluation -------------------------------------------------------------


def row_costs(A: ArrayLike, candidate, constraint: Constraint) -> np.ndarray:
    """Optimal-assignment cost of every row for a fixed center set / dictionary."""
    a = as_array(A)
    cand = np.atleast_2d(np.asarray(candidate, dtype=np.float64))
    if isinstance(constraint, KMeansAssignment):
        return nearest(a, cand)[1]
    if isinstance(constraint, SparseCode):
        if constraint.r >= cand.shape[0]:
            proj = a @ pinv(cand) @ cand
            return np.sum((proj - a) ** 2, axis=1)
        pair = sparse_code(a, cand, constraint.r)
    elif isinstance(constraint, DiscreteSparseCode):
        pair = sparse_code(a, cand, constraint.r, dmax=constraint.dmax)
    else:
        raise TypeError(f"unknown constraint {constraint!r}")
    R = pair.X @ pair.D - a
    return np.sum(R * R, axis=1)


def weighted_cost(W: WeightedInstance, candidate, constraint: Constraint) -> float:
    return float(W.weights @ row_costs(W.Asub, candidate, constraint))


def coreset_error(W: WeightedInstance, A: ArrayLike, candidates, constraint: Constraint) -> float:
    """Largest relative gap between coreset cost and true cost over ``candidates``."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("need at least one candidate")
    worst = 0.0
    for cand in candidates:
        true = float(row_costs(A, cand, constraint).sum())
        approx = weighted_cost(W, cand, constraint)
        if true == 0.0:
            err = 0.0 if approx == 0.0 else np.inf
        else:
            err = abs(approx - true) / true
        worst = max(worst, err)
    return worst


def coreset_of_coreset(W: WeightedInstance, m: int, seed: int) -> WeightedInstance:
    """Lightweight k-means coreset of a weighted instance; indices refer to the original rows."""
    inner = lightweight_coreset_kmeans(W.Asub, m, seed, weights=W.weights)
    return WeightedInstance(W.indices[inner.indices], inner.weights, inner.Asub)


def empirical_coreset_rate(A, make_coreset, candidates, constraint, tol: float, seeds) -> float:
    """Fraction of ``(seed, candidate)`` pairs whose relative error is at most ``tol``."""
    hits = total = 0
    for seed in seeds:
        W = make_coreset(seed)
        for cand in candidates:
            hits += coreset_error(W, A, [cand], constraint) <= tol
            total += 1
    return hits / total
