"""Planted lower-bound instance for k-means point assignment.

Each row is a random bit vector with one distinguished coordinate ``I``.
With probability ``1 - alpha`` coordinate ``I`` carries a spike of height
``t``; otherwise it is 0. The remaining ``d - 1`` coordinates are uniform
bits. The reference clustering sends a spiked row to cluster ``I`` and an
unspiked row to a random coordinate where it has a 1, with center ``j``
equal to ``(t+1)/2`` at coordinate ``j`` and ``1/2`` elsewhere. Every row
with at least one 1 off ``I`` then costs exactly ``(d + t^2 - 2t)/4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DesignMatrix


@dataclass(frozen=True)
class HardInstanceSpec:
    n: int
    d: int
    t: int
    alpha: float
    k: int = 0
    gamma: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k == 0:
            object.__setattr__(self, "k", self.d)
        if self.t < 2:
            raise ValueError("t must be >= 2")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")


@dataclass(frozen=True)
class HardInstance:
    spec: HardInstanceSpec
    A: DesignMatrix
    planted: np.ndarray  # coordinate I per random row
    spiked: np.ndarray   # whether that row carries the spike
    copies: int          # planted center copies appended after the n random rows

    @property
    def n_random(self) -> int:
        return self.spec.n


def planted_copies(n: int, d: int, t: int, k: int) -> int:
    """Copies of each center needed to pin near-optimal centers (natural log)."""
    inner = (math.log(k * d) + 9) / 2 + (t * t - 2 * t) / 4 + (d + t * t - 2 * t) / (4 * d)
    return math.ceil(400 * t * t * n / k * inner)


def target_centers(spec: HardInstanceSpec):
    """``k x d`` reference centers and the planted-copy count for ``spec``."""
    if spec.k != spec.d:
        raise ValueError("reference centers need k == d")
    C = np.full((spec.k, spec.d), 0.5)
    np.fill_diagonal(C, (spec.t + 1) / 2)
    return C, planted_copies(spec.n, spec.d, spec.t, spec.k)


def generate(spec: HardInstanceSpec, max_rows: int = 10**7) -> HardInstance:
    """Draw the ``n`` random rows, then append ``gamma`` copies of each center."""
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n, spec.d
    Z = rng.integers(0, 2, size=(n, d)).astype(np.float64)
    I = rng.integers(0, d, size=n)
    spiked = rng.random(n) >= spec.alpha
    Z[np.arange(n), I] = np.where(spiked, float(spec.t), 0.0)
    rows = [Z]
    if spec.gamma:
        total = n + spec.gamma * spec.k
        if total > max_rows:
            raise ValueError(f"instance would have {total} rows (limit {max_rows})")
        C, _ = target_centers(spec)
        rows.append(np.repeat(C, spec.gamma, axis=0))
    return HardInstance(spec, DesignMatrix(np.vstack(rows)), I, spiked, spec.gamma)


def nearly_optimal_assignment(inst: HardInstance, seed: int = 0) -> np.ndarray:
    """Cluster per row under the reference rule; rows with no 1 off ``I`` go to cluster 0."""
    rng = np.random.default_rng(seed)
    Z = np.asarray(inst.A)[: inst.n_random]
    labels = np.empty(inst.n_random, dtype=np.int64)
    for i in range(inst.n_random):
        if inst.spiked[i]:
            labels[i] = inst.planted[i]
            continue
        ones = np.flatnonzero(Z[i] == 1.0)
        ones = ones[ones != inst.planted[i]]
        labels[i] = rng.choice(ones) if ones.size else 0
    if inst.copies:
        labels = np.concatenate([labels, np.repeat(np.arange(inst.spec.k), inst.copies)])
    return labels


def clustered_cost_check(inst: HardInstance, seed: int = 0) -> float:
    """Cost of the reference clustering against the reference centers."""
    C, _ = target_centers(inst.spec)
    labels = nearly_optimal_assignment(inst, seed)
    R = np.asarray(inst.A) - C[labels]
    return float(np.sum(R * R))


def cost_upper_bound(n: int, d: int, t: int) -> float:
    return n * (d + t * t - 2 * t) / 4


def random_bits_cost_floor(n: int, d: int, k: int) -> float:
    """Lower bound on any k-clustering of ``n`` uniform bit vectors (natural log)."""
    return n * (d / 4 - (math.log(k * d) + 9) / 2)
