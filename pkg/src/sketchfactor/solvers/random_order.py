"""k-means over a row stream that arrives in uniformly random order.

When every row's sensitivity is at most ``alpha``, a random prefix of
``m = ceil(c3 * alpha * n * k * d / eps^2)`` rows already determines good
centers. The prefix is buffered, solved offline, and every row is then
assigned to its nearest center as it goes by. Memory stays at the prefix
buffer plus the centers plus one label per row.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from ..numerics import ArrayLike, FactorPair, KMeansAssignment, as_array, one_hot
from .oracles import lloyd, nearest
from .ptas import ptas_kmeans


def sensitivity_upper_bounds(A: ArrayLike, k: int, c: float = 8.0, seed: int = 0,
                             restarts: int = 10) -> Tuple[np.ndarray, float]:
    """``sigma_i = min(1, c * (dist_i^2 / cost + 1 / n_j))`` from a Lloyd solution.

    Returns the per-row bounds and their total.
    """
    a = as_array(A)
    if k < 1:
        raise ValueError("k must be >= 1")
    sol = lloyd(a, k, seed=seed, restarts=restarts)
    labels, d2 = nearest(a, sol.D)
    sizes = np.bincount(labels, minlength=k)
    dist_term = d2 / sol.cost if sol.cost > 0 else np.zeros_like(d2)
    sigma = np.minimum(1.0, c * (dist_term + 1.0 / sizes[labels]))
    return sigma, float(sigma.sum())


def prefix_size(n: int, d: int, k: int, eps: float, alpha: float, c3: float = 4.0) -> int:
    return min(n, math.ceil(c3 * alpha * n * k * d / eps**2))


def random_order_kmeans(rows: Iterable[Tuple[int, np.ndarray]], n: int, d: int, k: int,
                        eps: float, alpha: float, c3: float = 4.0, seed: int = 0,
                        solver: str = "ptas",
                        emit: Optional[Callable[[int, int], None]] = None) -> FactorPair:
    """Buffer a prefix, solve it, then assign the rest of the stream online.

    ``rows`` yields ``(index, row)`` pairs. ``solver`` is ``"ptas"`` or
    ``"lloyd"``. ``emit(index, cluster)`` is called once per row as its
    cluster becomes known. The returned cost is accumulated online; space
    counters are in ``info``.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if solver not in ("ptas", "lloyd"):
        raise ValueError(f"unknown solver {solver!r}")
    m = prefix_size(n, d, k, eps, alpha, c3)
    labels = np.full(n, -1, dtype=np.int64)
    buf = np.empty((m, d))
    buf_idx = np.empty(m, dtype=np.int64)
    filled = 0
    centers = None
    cost = 0.0
    peak = 0
    seen = 0

    def settle():
        nonlocal centers, cost
        order = np.argsort(buf_idx[:filled], kind="stable")
        prefix = buf[:filled][order]
        if solver == "ptas":
            centers = ptas_kmeans(prefix, k, eps, seed=seed).D
        else:
            centers = lloyd(prefix, k, seed=seed).D
        lab, d2 = nearest(prefix, centers)
        for i, j in zip(buf_idx[:filled][order], lab):
            labels[i] = j
            if emit:
                emit(int(i), int(j))
        cost += float(d2.sum())

    for i, row in rows:
        row = np.asarray(row, dtype=np.float64).reshape(-1)
        if row.size != d:
            raise ValueError(f"row {i} has {row.size} entries, expected {d}")
        if not 0 <= i < n or labels[i] != -1:
            raise ValueError(f"row index {i} out of range or repeated")
        seen += 1
        if centers is None:
            buf[filled], buf_idx[filled] = row, i
            labels[i] = -2  # buffered, cluster not yet known
            filled += 1
            # buffer and its indices, plus one label per row
            peak = max(peak, filled * (d + 1) + n)
            if filled == m:
                settle()
                peak = max(peak, m * (d + 1) + k * d + n)
            continue
        lab, d2 = nearest(row[None, :], centers)
        labels[i] = lab[0]
        cost += float(d2[0])
        peak = max(peak, m * (d + 1) + k * d + n + d)
        if emit:
            emit(int(i), int(lab[0]))
    if seen < n:
        raise ValueError(f"stream ended after {seen} rows, expected n={n}")
    info = {"prefix": m, "peak_words": peak, "bound_words": m * d + k * d + n, "solver": solver}
    return FactorPair(one_hot(labels, k), centers, KMeansAssignment(), cost, info)
