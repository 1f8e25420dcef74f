"""Column-dimension reduction for constrained factorization problems.

``reduce`` maps ``A`` (``n x d``) to ``A' = A T1 T2`` with ``s'`` columns,
where ``T1`` is a CountSketch over the columns and ``T2`` holds the top right
singular vectors of ``S A T1`` for a composed Gaussian-CountSketch ``S``.
A dictionary ``D'`` found for ``A'`` is mapped back with
``D = D' pinv(S A T) S A``.

When the reduction is vacuous (``s' >= d``) or ``A`` already has rank at most
``s'``, the instance is reduced exactly through ``A``'s own SVD instead; the
lift formula is unchanged because ``SAT`` and ``SA`` are filled in so that it
becomes ``D' V^T`` (or the identity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import ArrayLike, FactorPair, as_array, frob_cost, pinv
from .sketch import SketchKind, SketchSpec, apply_left, apply_right


@dataclass(frozen=True)
class ReducedInstance:
    Aprime: np.ndarray
    SAT: np.ndarray
    SA: np.ndarray
    sprime: int
    seed_S: Optional[int]
    seed_T1: Optional[int]
    T2: Optional[np.ndarray] = None
    passthrough: bool = False
    exact: bool = False


def reduced_dimension(k: int, eps: float, c1: float = 1.0) -> int:
    return math.ceil(c1 * k * math.log(k + 1) / eps)


def reduce(A: ArrayLike, k: int, eps: float, seed: int, c1: float = 1.0, c2: float = 1.0) -> ReducedInstance:
    """Sketch ``A`` down to ``ceil(c1 k log(k+1)/eps)`` columns."""
    a = as_array(A)
    n, d = a.shape
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be >= 1")
    sprime = reduced_dimension(k, eps, c1)
    if sprime >= d:
        eye = np.eye(d)
        return ReducedInstance(a.copy(), eye, eye, d, None, None, passthrough=True, exact=True)
    _, sv, Vt = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(sv > 1e-9 * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank <= sprime:
        V = Vt[:sprime].T
        # lift only into A's row space; directions past the rank carry no data
        lift = V.T.copy()
        lift[rank:] = 0.0
        return ReducedInstance(a @ V, np.eye(V.shape[1]), lift, V.shape[1], None, None,
                               T2=None, passthrough=False, exact=True)

    seeds = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    width = min(d, math.ceil(c2 * sprime**2 / eps**2))
    T1 = SketchSpec(SketchKind.COUNT_SKETCH, width, d, int(seeds[1]))
    S = SketchSpec(SketchKind.COMPOSED, sprime, n, int(seeds[0]))
    AT1 = apply_right(a, T1)
    SA = apply_left(S, a)
    SAT1 = apply_left(S, AT1)
    _, _, Vt1 = np.linalg.svd(SAT1, full_matrices=True)
    T2 = Vt1[:sprime].T
    return ReducedInstance(AT1 @ T2, SAT1 @ T2, SA, sprime, S.seed, T1.seed, T2=T2)


def lift_dictionary(R: ReducedInstance, Dprime) -> np.ndarray:
    """Map a ``k x s'`` dictionary back to ``k x d``: ``D' pinv(SAT) SA``."""
    Dprime = np.atleast_2d(np.asarray(Dprime, dtype=np.float64))
    if Dprime.shape[1] != R.SAT.shape[1]:
        raise ValueError(f"dictionary has {Dprime.shape[1]} columns, reduced instance has {R.SAT.shape[1]}")
    return Dprime @ pinv(R.SAT) @ R.SA


Solver = Callable[[np.ndarray], FactorPair]


def reduce_and_solve(A: ArrayLike, k: int, eps: float, seed: int, solver: Solver,
                     retries: int = 3, c1: float = 1.0, c2: float = 1.0):
    """Reduce, solve the small problem, lift; keep the best of ``retries`` seeds.

    ``solver`` receives ``A'`` and returns a :class:`FactorPair` for it. The
    returned pair uses the reduced solution's ``X`` with the lifted ``D``.
    Returns ``(pair, reduced_instance)``.
    """
    a = as_array(A)
    best = None
    for attempt in range(max(1, retries)):
        R = reduce(a, k, eps, seed=int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0]), c1=c1, c2=c2)
        small = solver(R.Aprime)
        D = lift_dictionary(R, small.D)
        cost = frob_cost(a, small.X, D)
        if best is None or cost < best[0].cost:
            best = (FactorPair(small.X, D, small.constraint, cost,
                               {"reduced_cost": small.cost, "attempt": attempt, "sprime": R.sprime}), R)
        if R.exact:
            break
    return best
