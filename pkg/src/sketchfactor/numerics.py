"""Dense linear-algebra kernels and the two Frobenius cost objectives.

Every solver in the package is scored by :func:`frob_cost`, i.e. the squared
Frobenius norm ``||XD - A||_F^2``. Costs are always kept squared; callers that
need the unsquared norm take a square root themselves.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

RANK_RTOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class NumericError(ValueError):
    """Input contains NaN or infinite entries."""


class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured budget."""

    def __init__(self, what: str, required: float, cap: float):
        super().__init__(f"{what}: needs {required:.4g} evaluations, cap is {cap:.4g}")
        self.required = required
        self.cap = cap


@dataclass(frozen=True)
class DesignMatrix:
    """The ``n x d`` input matrix, one data point per row."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64, copy=True)
        if a.ndim != 2:
            raise DimensionError(f"design matrix must be 2-d, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError(f"design matrix needs n, d >= 1, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NumericError("design matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


ArrayLike = Union[np.ndarray, DesignMatrix]


def as_array(A: ArrayLike) -> np.ndarray:
    if isinstance(A, DesignMatrix):
        return A.entries
    a = np.asarray(A, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    return a


# -- left-factor constraints ------------------------------------------------


@dataclass(frozen=True)
class KMeansAssignment:
    """Rows of X are standard basis vectors."""

    def check(self, X: np.ndarray) -> bool:
        return bool(np.all((X == 0) | (X == 1)) and np.all(X.sum(axis=1) == 1))


@dataclass(frozen=True)
class SparseCode:
    """Rows of X have at most ``r`` nonzeros."""

    r: int

    def check(self, X: np.ndarray) -> bool:
        return bool(np.all(np.count_nonzero(X, axis=1) <= self.r))


@dataclass(frozen=True)
class DiscreteSparseCode:
    """At most ``r`` nonzeros per row, each an integer in ``[-dmax, dmax]``."""

    r: int
    dmax: int

    def check(self, X: np.ndarray) -> bool:
        if not np.all(np.count_nonzero(X, axis=1) <= self.r):
            return False
        return bool(np.all(X == np.round(X)) and np.all(np.abs(X) <= self.dmax))


Constraint = Union[KMeansAssignment, SparseCode, DiscreteSparseCode]


@dataclass(frozen=True)
class FactorPair:
    """A solution ``(X, D)`` together with its cost against some ``A``.

    ``info`` carries solver diagnostics (flags, scores, counters) and does not
    take part in equality.
    """

    X: np.ndarray
    D: np.ndarray
    constraint: Constraint
    cost: float
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, A: ArrayLike, X, D, constraint: Constraint, **info) -> "FactorPair":
        X = np.asarray(X, dtype=np.float64)
        D = np.asarray(D, dtype=np.float64)
        return cls(X, D, constraint, frob_cost(A, X, D), dict(info))

    @property
    def labels(self) -> np.ndarray:
        """Cluster index per row (only meaningful for k-means assignments)."""
        return np.argmax(self.X, axis=1)

    def satisfies_constraint(self) -> bool:
        return self.constraint.check(self.X)


def one_hot(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    X = np.zeros((labels.shape[0], k))
    X[np.arange(labels.shape[0]), labels] = 1.0
    return X


# -- kernels ----------------------------------------------------------------


def frob_cost(A: ArrayLike, X, D) -> float:
    """Squared Frobenius residual ``||XD - A||_F^2``."""
    a = as_array(A)
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if X.ndim != 2 or D.ndim != 2:
        raise DimensionError("X and D must be 2-d")
    if X.shape[0] != a.shape[0] or D.shape[1] != a.shape[1] or X.shape[1] != D.shape[0]:
        raise DimensionError(
            f"shape mismatch: X {X.shape}, D {D.shape}, A {a.shape}"
        )
    R = X @ D - a
    return float(np.sum(R * R))


def _check_finite(*arrays):
    for m in arrays:
        if not np.all(np.isfinite(m)):
            raise NumericError("non-finite input")


def pinv(M, rtol: float = RANK_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``rtol * sigma_max`` are treated as zero.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError("pinv expects a matrix")
    _check_finite(M)
    if M.size == 0:
        return np.zeros(M.shape[::-1])
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.shape[::-1])
    keep = s > rtol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def least_squares(M, B) -> np.ndarray:
    """Minimum-norm solution of ``min_Z ||MZ - B||_F``."""
    M = np.asarray(M, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    squeeze = B.ndim == 1
    if squeeze:
        B = B[:, None]
    if M.ndim != 2 or B.ndim != 2 or M.shape[0] != B.shape[0]:
        raise DimensionError(f"least_squares shape mismatch: M {M.shape}, B {B.shape}")
    _check_finite(M, B)
    Z = pinv(M) @ B
    return Z[:, 0] if squeeze else Z


def orthonormal_basis(M, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis for the column space of ``M`` (numerical rank)."""
    M = np.asarray(M, dtype=np.float64)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0))
    return U[:, s > rtol * s[0]]


# -- file format ------------------------------------------------------------


def read_design_matrix(path: Union[str, os.PathLike]) -> DesignMatrix:
    """Read ``"n d"`` followed by ``n`` lines of ``d`` decimals."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected header 'n d'")
        n, d = int(header[0]), int(header[1])
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != n:
        raise ValueError(f"{path}: header says {n} rows, found {len(rows)}")
    a = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
    if a.shape != (n, d):
        raise DimensionError(f"{path}: expected {n}x{d}, parsed {a.shape}")
    return DesignMatrix(a)


def write_design_matrix(A: ArrayLike, path: Union[str, os.PathLike], header: Optional[str] = None) -> None:
    a = as_array(A)
    with open(path, "w") as fh:
        if header is None:
            fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        else:
            fh.write(header + "\n")
        for row in a:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
