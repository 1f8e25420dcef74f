"""Recover a factorization from the three linear sketches of a turnstile stream.

For each candidate left factor ``X`` the dictionary is fit in the left sketch,
``D = pinv(S X) (S A)``; the left factor is then re-chosen row by row in the
right-sketched space, comparing ``D T`` against the rows of ``A T``; finally
every candidate is scored by ``||W vec(X D) - W vec(A)||^2`` and the lowest
score wins (ties to the earliest candidate).

Candidates are enumerated directly, in batches, so the exhaustive budget must
fit under ``cap``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from typing import NamedTuple, Optional

import numpy as np

from ..numerics import (
    ArrayLike,
    CapExceeded,
    Constraint,
    DiscreteSparseCode,
    FactorPair,
    KMeansAssignment,
    RANK_RTOL,
)
from ..sketch import apply_left, dense
from ..stream import SketchSizes, SketchState
from .oracles import DEFAULT_CAP, canonical_labelings


class SketchedSolution(NamedTuple):
    """A solution recovered from sketches alone.

    ``score`` is the sketched cost estimate; the true cost needs ``A`` and is
    available through :meth:`evaluate`.
    """

    X: np.ndarray
    D: np.ndarray
    score: float
    constraint: Constraint
    candidates: int

    def evaluate(self, A: ArrayLike) -> FactorPair:
        return FactorPair.build(A, self.X, self.D, self.constraint, score=self.score, candidates=self.candidates)


def batched_pinv(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Pseudoinverse of every matrix in a ``(B, p, q)`` stack, same cutoff as ``pinv``."""
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    top = s[:, :1]
    keep = (s > rtol * top) & (top > 0)
    inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return np.einsum("bji,bj,bkj->bik", Vt, inv, U)


def _check_sizes(state: SketchState, recommended: SketchSizes) -> None:
    have = (state.S.rows, state.T.rows, state.W.rows)
    want = (recommended.s, recommended.t, recommended.w)
    if any(h < w for h, w in zip(have, want)):
        warnings.warn(f"sketch sizes {have} are below the recommended {want} for this eps")


class _Scorer:
    """Dense copies of ``S`` and ``T`` plus running argmin over scored candidates."""

    def __init__(self, state: SketchState):
        self.state = state
        self.S = dense(state.S)
        self.Tt = dense(state.T).T
        self.best = (np.inf, None, None)
        self.seen = 0

    def fit(self, Xc: np.ndarray) -> np.ndarray:
        SX = np.einsum("sn,bnk->bsk", self.S, Xc)
        return batched_pinv(SX) @ self.state.SA

    def offer(self, Xt: np.ndarray, Dt: np.ndarray) -> None:
        recon = np.einsum("bnk,bkd->bnd", Xt, Dt).reshape(Xt.shape[0], -1)
        sketched = apply_left(self.state.W, recon.T)
        scores = np.sum((sketched - self.state.WvecA[:, None]) ** 2, axis=0)
        i = int(np.argmin(scores))
        if scores[i] < self.best[0]:
            self.best = (float(scores[i]), Xt[i].copy(), Dt[i].copy())
        self.seen += Xt.shape[0]


def guess_sketch_kmeans(state: SketchState, k: int, eps: Optional[float] = None,
                        cap: float = DEFAULT_CAP, batch: int = 2048) -> SketchedSolution:
    """k-means from ``(SA, AT, W vec A)`` by enumerating assignments of all ``n`` rows."""
    n = state.n
    if k < 1:
        raise ValueError("k must be >= 1")
    if float(k) ** n > cap:
        raise CapExceeded("guess-the-sketch k-means", float(k) ** n, cap)
    if eps is not None:
        _check_sizes(state, SketchSizes.for_kmeans(n, k, eps))
    sc = _Scorer(state)
    eye = np.eye(k)
    for labels in canonical_labelings(n, min(k, n), batch=batch):
        Dt = sc.fit(eye[labels])
        DT = Dt @ sc.Tt
        diff = state.AT[None, :, None, :] - DT[:, None, :, :]
        relabel = np.argmin(np.einsum("bnkt,bnkt->bnk", diff, diff), axis=2)
        sc.offer(eye[relabel], Dt)
    score, X, D = sc.best
    return SketchedSolution(X, D, score, KMeansAssignment(), sc.seen)


def discrete_rows(k: int, r: int, dmax: int) -> np.ndarray:
    """Distinct rows with at most ``r`` nonzeros in ``[-dmax, dmax]``, zero row first."""
    rows = [np.zeros(k)]
    values = [v for v in range(-dmax, dmax + 1) if v != 0]
    for size in range(1, r + 1):
        for S in itertools.combinations(range(k), size):
            for vals in itertools.product(values, repeat=size):
                row = np.zeros(k)
                row[list(S)] = vals
                rows.append(row)
    return np.array(rows)


def guess_sketch_sdl(state: SketchState, k: int, r: int, dmax: int, eps: Optional[float] = None,
                     cap: float = DEFAULT_CAP, batch: int = 1024) -> SketchedSolution:
    """Discrete r-sparse dictionary learning from sketches.

    Candidate left factors range over every matrix whose rows are distinct
    discrete codes (:func:`discrete_rows`).
    """
    n = state.n
    if not 1 <= r <= k:
        raise ValueError("need 1 <= r <= k")
    codes = discrete_rows(k, r, dmax)
    c = codes.shape[0]
    total = float(c) ** n
    if total > cap:
        raise CapExceeded("guess-the-sketch discrete dictionary learning", total, cap)
    if eps is not None:
        _check_sizes(state, SketchSizes.for_discrete_sdl(n, k, r, dmax, eps))
    sc = _Scorer(state)
    radix = c ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, int(total), batch):
        idx = np.arange(start, min(int(total), start + batch), dtype=np.int64)
        digits = (idx[:, None] // radix[None, :]) % c
        Dt = sc.fit(codes[digits])
        recon = np.einsum("ck,bkt->bct", codes, Dt @ sc.Tt)
        diff = state.AT[None, :, None, :] - recon[:, None, :, :]
        choice = np.argmin(np.einsum("bnct,bnct->bnc", diff, diff), axis=2)
        sc.offer(codes[choice], Dt)
    score, X, D = sc.best
    return SketchedSolution(X, D, score, DiscreteSparseCode(r, dmax), sc.seen)


def sketched_cost(state: SketchState, X, D) -> float:
    """``||W vec(XD) - W vec(A)||^2`` for any pair, from the stored sketch."""
    recon = (np.asarray(X, dtype=np.float64) @ np.asarray(D, dtype=np.float64)).reshape(-1, 1)
    return float(np.sum((apply_left(state.W, recon)[:, 0] - state.WvecA) ** 2))


def enumeration_size(n: int, k: int, r: Optional[int] = None, dmax: Optional[int] = None) -> float:
    """Candidate count for k-means (``r`` is None) or discrete dictionary learning."""
    if r is None:
        return float(k) ** n
    per_row = sum(math.comb(k, j) * (2 * dmax) ** j for j in range(r + 1))
    return float(per_row) ** n
