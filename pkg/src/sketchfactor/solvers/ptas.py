"""Offline approximation pipelines for k-means and r-sparse dictionary learning.

Both pipelines share one skeleton: reduce the column dimension, shrink the
rows to a weighted coreset, enumerate the combinatorial part of the left
factor on the coreset, solve for the dictionary, lift it back and re-code the
full input against it.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from ..coreset import WeightedInstance, dictionary_coreset, lightweight_coreset_kmeans
from ..dimreduce import lift_dictionary, reduce
from ..numerics import (
    ArrayLike,
    CapExceeded,
    FactorPair,
    KMeansAssignment,
    NumericError,
    SparseCode,
    as_array,
    least_squares,
    one_hot,
    orthonormal_basis,
    pinv,
)
from .oracles import (
    DEFAULT_CAP,
    canonical_labelings,
    count_partitions,
    exact_centroids,
    labelings_cost,
    lloyd,
    nearest,
    sparse_code,
)

# -- leverage score sampling -----------------------------------------------


@dataclass(frozen=True)
class LeverageSample:
    indices: np.ndarray
    rescale: np.ndarray
    q: np.ndarray
    probs: np.ndarray
    leverage: np.ndarray

    def apply(self, M) -> np.ndarray:
        """Rows of the sampled-and-rescaled matrix ``(Omega D)^T M``."""
        M = np.asarray(M, dtype=np.float64)
        return self.rescale[:, None] * M[self.indices]


def discretize_probabilities(p: np.ndarray) -> np.ndarray:
    """Round each positive ``p_i`` up to a power of 1/2, floored at ``2/m``.

    ``p_i`` in ``(2^-t, 2^-(t-1)]`` maps to ``2^-(t-1)`` while ``t <= log2 m``;
    smaller values map to ``2/m``. Zero stays zero.
    """
    m = p.size
    q = np.zeros(m)
    tmax = math.floor(math.log2(m)) if m > 1 else 1
    pos = p > 0
    t = np.floor(-np.log2(p[pos])) + 1
    vals = np.where(t <= tmax, 2.0 ** -(t - 1), 2.0 / m)
    q[pos] = np.maximum(vals, p[pos])
    return q


def leverage_sample(M, s: int, seed: int) -> LeverageSample:
    """Sample ``s`` rows of ``M`` i.i.d. by discretized leverage scores."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if s < 1:
        raise ValueError("s must be >= 1")
    m = M.shape[0]
    Z = orthonormal_basis(M)
    if Z.shape[1] == 0:
        lev = np.zeros(m)
        p = np.full(m, 1.0 / m)
        q = p.copy()
    else:
        lev = np.sum(Z * Z, axis=1)
        p = lev / Z.shape[1]
        q = discretize_probabilities(p)
    probs = q / q.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(m, size=s, replace=True, p=probs)
    return LeverageSample(idx, 1.0 / np.sqrt(probs[idx] * s), q, probs, lev)


def sketched_least_squares(M, B, s: int, seed: int) -> np.ndarray:
    """Least squares on a leverage-sampled subset of rows."""
    samp = leverage_sample(M, s, seed)
    return least_squares(samp.apply(M), samp.apply(np.asarray(B, dtype=np.float64).reshape(len(M), -1)))


# -- k-means pipeline ------------------------------------------------------


def default_coreset_size(n: int, k: int, budget: int = 20000, per_row: Optional[int] = None) -> int:
    """Largest ``m <= n`` whose (relabel-canonical) enumeration fits in ``budget``."""
    m = min(n, max(1, k))
    while m < n:
        nxt = m + 1
        size = count_partitions(nxt, k) if per_row is None else per_row ** nxt / math.factorial(k)
        if size > budget:
            break
        m = nxt
    return m


def _weighted_assign_cost(a, w, centers):
    """Weighted cost of the best reassignment for a batch of center sets."""
    diff = a[None, :, None, :] - centers[:, None, :, :]
    d2 = np.einsum("bnkd,bnkd->bnk", diff, diff)
    return d2.min(axis=2) @ w


def _refit_kmeans(a, C):
    labels, _ = nearest(a, C)
    C = exact_centroids(a, labels, C.shape[0], C)
    labels, _ = nearest(a, C)
    return labels, C


def _enumerate_kmeans_coreset(core: WeightedInstance, k: int, batch: int = 4096):
    best_cost, best_C = np.inf, None
    evaluated = 0
    for block in canonical_labelings(core.m, k, batch=batch):
        _, centers = labelings_cost(core.Asub, block, k, core.weights)
        costs = _weighted_assign_cost(core.Asub, core.weights, centers)
        i = int(np.argmin(costs))
        evaluated += block.shape[0]
        if costs[i] < best_cost:
            best_cost, best_C = float(costs[i]), centers[i]
    return best_C, best_cost, evaluated


def ptas_kmeans(A: ArrayLike, k: int, eps: float, seed: int = 0, m: Optional[int] = None,
                cap: float = DEFAULT_CAP, retries: int = 3, refit: bool = True,
                c1: float = 1.0, c2: float = 1.0) -> FactorPair:
    """Reduce, coreset, enumerate coreset assignments, lift and assign.

    For every assignment ``Y`` of the ``m`` coreset rows the candidate centers
    are the weighted least-squares fit ``D' = (WY)^+ (WA)``; the candidate
    with the smallest weighted reassignment cost wins. Of ``retries``
    independent runs the one with the lowest true cost is returned.
    """
    a = as_array(A)
    n = a.shape[0]
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    m = default_coreset_size(n, k) if m is None else int(m)
    best = None
    for attempt in range(max(1, retries)):
        sub = int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        R = reduce(a, k, eps, seed=sub, c1=c1, c2=c2)
        core = lightweight_coreset_kmeans(R.Aprime, m, seed=sub)
        info = {"attempt": attempt, "coreset_size": m, "sprime": R.sprime, "fallback": None}
        if float(k) ** m > cap:
            warnings.warn(f"k^m = {float(k) ** m:.3g} exceeds cap; using Lloyd on the coreset")
            info["fallback"] = "lloyd"
            Dp = lloyd(core.Asub, k, seed=sub, restarts=10, weights=core.weights).D
            info["coreset_cost"] = None
        else:
            Dp, info["coreset_cost"], info["enumerated"] = _enumerate_kmeans_coreset(core, k)
        C = lift_dictionary(R, Dp)
        if refit:
            labels, C = _refit_kmeans(a, C)
        else:
            labels, _ = nearest(a, C)
        pair = FactorPair.build(a, one_hot(labels, k), C, KMeansAssignment(), **info)
        if best is None or pair.cost < best.cost:
            best = pair
    return best


# -- sparsity patterns and the restricted solver -------------------------


@dataclass(frozen=True)
class SparsityPattern:
    supports: Tuple[Tuple[int, ...], ...]
    k: int

    def __post_init__(self):
        for S in self.supports:
            if any(j < 0 or j >= self.k for j in S) or len(set(S)) != len(S):
                raise ValueError(f"bad support {S} for k={self.k}")

    @property
    def r(self) -> int:
        return max((len(S) for S in self.supports), default=0)

    def mask(self) -> np.ndarray:
        M = np.zeros((len(self.supports), self.k), dtype=bool)
        for i, S in enumerate(self.supports):
            M[i, list(S)] = True
        return M


class PatternSolution(NamedTuple):
    X: np.ndarray
    D: np.ndarray
    objective: float
    history: List[float]
    exact: bool


def _weighted_objective(B, X, D):
    R = X @ D - B
    return float(np.sum(R * R))


def _basis_completion(v: np.ndarray, k: int, d: int) -> np.ndarray:
    """``k x d``: unit ``v`` followed by an orthonormal completion (zero rows past ``d``)."""
    nv = np.linalg.norm(v)
    start = v / nv if nv > 0 else np.eye(d)[0]
    Q, _ = np.linalg.qr(np.column_stack([start, np.eye(d)]))
    Q[:, 0] *= np.sign(Q[:, 0] @ start)
    D = np.zeros((k, d))
    D[:min(k, d)] = Q[:, :min(k, d)].T
    return D


def _record(history: List[float], value: float) -> None:
    # each half-step is an exact minimization, so the objective cannot rise
    if history and value > history[-1] + 1e-9 * max(1.0, history[-1]):
        raise NumericError(f"alternating objective increased: {history[-1]!r} -> {value!r}")
    history.append(value)


def _decoupled_groups(pattern: SparsityPattern):
    """Rows grouped by support, or ``None`` if distinct supports overlap."""
    groups = {}
    for i, S in enumerate(pattern.supports):
        groups.setdefault(tuple(sorted(S)), []).append(i)
    used = [set(S) for S in groups if S]
    for x, y in itertools.combinations(used, 2):
        if x & y:
            return None
    return groups


def pattern_solver(Asub, weights, pattern: SparsityPattern, k: int, starts: int = 10,
                   tol: float = 1e-8, max_iter: int = 500, seed: int = 0,
                   exact_when_decoupled: bool = True) -> PatternSolution:
    """Minimize ``sum_i w_i ||x_i D - a_i||^2`` with ``x_i`` supported on the pattern.

    When the distinct supports are pairwise disjoint the problem splits into
    independent truncated SVDs and is solved exactly. Otherwise alternating
    least squares runs from ``starts`` random initializations; ``history``
    records the objective after every half-step of the best start and is
    non-increasing.
    """
    a = np.atleast_2d(np.asarray(Asub, dtype=np.float64))
    m, d = a.shape
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(pattern.supports) != m:
        raise ValueError("pattern length does not match the number of rows")
    sw = np.sqrt(w)
    B = sw[:, None] * a
    mask = pattern.mask()

    if not mask.any():
        D = _basis_completion(w @ a / w.sum(), k, d)
        X = np.zeros((m, k))
        obj = _weighted_objective(B, X, D)
        return PatternSolution(X, D, obj, [obj], True)

    groups = _decoupled_groups(pattern) if exact_when_decoupled else None
    if groups is not None:
        Xs = np.zeros((m, k))
        D = np.zeros((k, d))
        for S, rows in groups.items():
            if not S:
                continue
            U, s, Vt = np.linalg.svd(B[rows], full_matrices=False)
            rank = min(len(S), s.size)
            D[list(S)[:rank]] = Vt[:rank]
            Xs[np.ix_(rows, list(S)[:rank])] = U[:, :rank] * s[:rank]
        obj = _weighted_objective(B, Xs, D)
        return PatternSolution(Xs / sw[:, None], D, obj, [obj], True)

    rng = np.random.default_rng(seed)
    by_support = {}
    for i, S in enumerate(pattern.supports):
        by_support.setdefault(tuple(S), []).append(i)
    best = None
    for start in range(max(1, starts)):
        if start == 0:
            D = B[rng.choice(m, size=k, replace=m < k)] + 1e-3 * rng.normal(size=(k, d))
        else:
            D = rng.normal(size=(k, d)) * (np.linalg.norm(B) / math.sqrt(max(m * d, 1)))
        X = np.zeros((m, k))
        history: List[float] = []
        for _ in range(max_iter):
            for S, rows in by_support.items():
                if S:
                    X[np.ix_(rows, list(S))] = B[rows] @ pinv(D[list(S)])
            _record(history, _weighted_objective(B, X, D))
            D = pinv(X) @ B
            _record(history, _weighted_objective(B, X, D))
            if len(history) > 2 and history[-3] - history[-1] <= tol * history[-3]:
                break
        if best is None or history[-1] < best[2]:
            best = (X.copy(), D.copy(), history[-1], history)
    X, D, obj, history = best
    return PatternSolution(X / sw[:, None], D, obj, history, False)


def enumerate_patterns(m: int, k: int, r: int, canonical: bool = True):
    """All sparsity patterns over ``m`` rows, one per atom-relabeling orbit when ``canonical``."""
    combos = list(itertools.combinations(range(k), r))
    if r == k:
        yield SparsityPattern(tuple([combos[0]] * m), k)
        return
    if r == 1 and canonical:
        for block in canonical_labelings(m, k):
            for row in block:
                yield SparsityPattern(tuple((int(j),) for j in row), k)
        return
    index = {c: i for i, c in enumerate(combos)}
    perms = [tuple(index[tuple(sorted(p[j] for j in c))] for c in combos)
             for p in itertools.permutations(range(k))] if canonical else []
    for codes in itertools.product(range(len(combos)), repeat=m):
        if canonical and any(tuple(p[c] for c in codes) < codes for p in perms):
            continue
        yield SparsityPattern(tuple(combos[c] for c in codes), k)


def random_patterns(m: int, k: int, r: int, count: int, seed: int):
    combos = list(itertools.combinations(range(k), r))
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield SparsityPattern(tuple(combos[c] for c in rng.integers(0, len(combos), size=m)), k)


def solve_patterns(Asub, weights, k: int, r: int, patterns, screen: Optional[dict] = None,
                   polish: int = 5, **solver_kw):
    """Run the pattern solver over ``patterns``; keep the first strict minimum.

    Patterns the solver cannot settle exactly are first screened with the
    cheaper ``screen`` settings; the ``polish`` best of those are re-solved
    with the full settings.
    """
    screen = {"starts": 1, "max_iter": 40} if screen is None else screen
    best = None
    count = 0
    monotone = True
    shortlist = []

    def consider(pat, sol):
        nonlocal best, monotone
        h = np.asarray(sol.history)
        monotone &= bool(np.all(np.diff(h) <= 1e-9 * np.maximum(1.0, np.abs(h[:-1]))))
        if best is None or sol.objective < best[1].objective:
            best = (pat, sol)

    for pat in patterns:
        count += 1
        quick = pattern_solver(Asub, weights, pat, k, **{**solver_kw, **screen})
        if quick.exact:
            consider(pat, quick)
        else:
            shortlist.append((quick.objective, count, pat))
            shortlist.sort(key=lambda item: item[:2])
            del shortlist[polish:]
    for _, _, pat in shortlist:
        consider(pat, pattern_solver(Asub, weights, pat, k, **solver_kw))
    return best[0], best[1], count, monotone


def brute_force_sdl(A: ArrayLike, k: int, r: int, cap: float = DEFAULT_CAP, **solver_kw) -> FactorPair:
    """Exhaustive pattern enumeration on the full input (oracle for tiny instances)."""
    a = as_array(A)
    n = a.shape[0]
    total = float(math.comb(k, r)) ** n
    if total > cap:
        raise CapExceeded("exhaustive sparsity patterns", total, cap)
    pat, sol, count, monotone = solve_patterns(a, None, k, r, enumerate_patterns(n, k, r), **solver_kw)
    return FactorPair.build(a, sol.X, sol.D, SparseCode(r), patterns=count, monotone=monotone)


def ptas_sdl(A: ArrayLike, k: int, r: int, eps: float, seed: int = 0, m: Optional[int] = None,
             cap: float = DEFAULT_CAP, pattern_budget: int = 20000, retries: int = 1,
             refit: bool = True, c1: float = 1.0, c2: float = 1.0, **solver_kw) -> FactorPair:
    """Reduce, build a dictionary coreset, try sparsity patterns, lift and re-code.

    When every row fits in the pattern budget the coreset is the whole
    (reduced) input with unit weights. If ``C(k,r)^m`` exceeds ``cap`` a
    budget of random patterns is tried instead and ``info['fallback']`` is set.
    """
    a = as_array(A)
    n = a.shape[0]
    if not 1 <= r <= k:
        raise ValueError("need 1 <= r <= k")
    per_row = math.comb(k, r)
    if m is None:
        if r == k:
            m = n
        elif r == 1:
            m = default_coreset_size(n, k, pattern_budget)
        else:
            m = default_coreset_size(n, k, pattern_budget // 40, per_row=per_row)
        m = max(m, min(n, k * r))
    best = None
    for attempt in range(max(1, retries)):
        sub = int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        R = reduce(a, k, eps, seed=sub, c1=c1, c2=c2)
        if m >= n:
            core = dictionary_coreset(R.Aprime, k, r, n, sub, replace=False)
        else:
            core = dictionary_coreset(R.Aprime, k, r, m, sub)
        info = {"attempt": attempt, "coreset_size": core.m, "sprime": R.sprime, "fallback": None}
        if float(per_row) ** core.m > cap:
            warnings.warn("pattern enumeration exceeds cap; sampling random patterns")
            info["fallback"] = "random-patterns"
            pats = random_patterns(core.m, k, r, pattern_budget, sub)
        else:
            pats = enumerate_patterns(core.m, k, r)
        _, sol, count, monotone = solve_patterns(core.Asub, core.weights, k, r, pats, seed=sub, **solver_kw)
        info.update(patterns=count, monotone=monotone, coreset_objective=sol.objective)
        D = lift_dictionary(R, sol.D)
        pair = sparse_code(a, D, r)
        if refit:
            D2 = least_squares(pair.X, a)
            pair2 = sparse_code(a, D2, r)
            if pair2.cost <= pair.cost:
                pair = pair2
        pair = FactorPair(pair.X, pair.D, pair.constraint, pair.cost, info)
        if best is None or pair.cost < best.cost:
            best = pair
    return best
