"""Seeded random linear maps whose columns are regenerated on demand.

A :class:`SketchSpec` never stores its matrix. Every entry is a pure function
of ``(seed, kind, column, row)`` computed with a SplitMix64-style counter
hash, so a streaming consumer can rebuild column ``j`` whenever an update
touches coordinate ``j``.

Matrix convention: the sketch is ``rows x cols`` and acts on vectors of length
``cols``. ``apply_left(spec, A)`` is ``S @ A`` (``spec.cols == n``) and
``apply_right(A, spec)`` is ``A @ S.T`` (``spec.cols == d``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .numerics import ArrayLike, DimensionError, as_array

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / float(1 << 53)

# Columns generated per chunk by apply_left/apply_right.
BLOCK = 512


class SketchKind(str, Enum):
    COUNT_SKETCH = "CountSketch"
    SIGN = "Sign"
    GAUSSIAN = "Gaussian"
    COMPOSED = "ComposedGaussianCountSketch"


_TAG = {
    SketchKind.COUNT_SKETCH: 0x436F756E74,
    SketchKind.SIGN: 0x5369676E,
    SketchKind.GAUSSIAN: 0x476175737,
    SketchKind.COMPOSED: 0x436F6D70,
}


def _mix(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_hash(seed: int, tag: int, col, row, lane: int = 0) -> np.ndarray:
    """64-bit hash of ``(seed, tag, col, row, lane)``; broadcasts over col/row."""
    col = np.atleast_1d(np.asarray(col, dtype=np.uint64))
    row = np.atleast_1d(np.asarray(row, dtype=np.uint64))
    h = _mix(np.atleast_1d(np.uint64(seed & 0xFFFFFFFFFFFFFFFF)) ^ np.uint64(tag))
    h = _mix(h ^ np.uint64(lane))
    h = _mix(h ^ col)
    return _mix(h ^ row)


def _uniform_open(h: np.ndarray) -> np.ndarray:
    # (0, 1]: never zero, safe for log in Box-Muller
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53


def _derive_seed(seed: int, label: int) -> int:
    return int(counter_hash(seed, 0x5EED, label, 0)[0])


@dataclass(frozen=True)
class SketchSpec:
    """Description of a ``rows x cols`` random map.

    ``inner`` is the CountSketch width of a composed Gaussian-CountSketch map
    and is ignored for the other kinds.
    """

    kind: SketchKind
    rows: int
    cols: int
    seed: int
    inner: Optional[int] = None
    scale: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", SketchKind(self.kind))
        if self.rows < 1 or self.cols < 1:
            raise ValueError("sketch needs rows, cols >= 1")
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)
        if self.kind is SketchKind.COMPOSED:
            if self.inner is None:
                object.__setattr__(self, "inner", default_inner(self.rows, self.cols))
            elif self.inner < 1:
                raise ValueError("inner width must be >= 1")
        else:
            object.__setattr__(self, "inner", None)
        scale = 1.0 if self.kind is SketchKind.COUNT_SKETCH else 1.0 / math.sqrt(self.rows)
        object.__setattr__(self, "scale", scale)

    # factors of the composed map S = G @ C
    def count_factor(self) -> "SketchSpec":
        return SketchSpec(SketchKind.COUNT_SKETCH, self.inner, self.cols, _derive_seed(self.seed, 1))

    def gaussian_factor(self) -> "SketchSpec":
        return SketchSpec(SketchKind.GAUSSIAN, self.rows, self.inner, _derive_seed(self.seed, 2))

    def to_line(self) -> str:
        base = f"{self.kind.value} {self.rows} {self.cols} {self.seed}"
        return base + (f" {self.inner}" if self.kind is SketchKind.COMPOSED else "")

    @classmethod
    def from_line(cls, line: str) -> "SketchSpec":
        parts = line.split()
        if len(parts) not in (4, 5):
            raise ValueError(f"expected 'kind rows cols seed [inner]', got {line!r}")
        inner = int(parts[4]) if len(parts) == 5 else None
        return cls(SketchKind(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]), inner)


def default_inner(rows: int, cols: int) -> int:
    """CountSketch width for a composed map: ``rows^2`` clipped to ``[rows, max(rows, cols)]``."""
    return max(rows, min(cols, rows * rows))


# -- column generation ------------------------------------------------------


def _count_buckets(spec: SketchSpec, cols: np.ndarray):
    tag = _TAG[SketchKind.COUNT_SKETCH]
    bucket = counter_hash(spec.seed, tag, cols, 0, lane=0) % np.uint64(spec.rows)
    sign_bit = counter_hash(spec.seed, tag, cols, 0, lane=1) >> np.uint64(63)
    return bucket.astype(np.int64), 1.0 - 2.0 * sign_bit.astype(np.float64)


def sketch_block(spec: SketchSpec, cols) -> np.ndarray:
    """Columns ``cols`` of the sketch as a ``rows x len(cols)`` array."""
    cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
    if cols.size and (cols.min() < 0 or cols.max() >= spec.cols):
        raise IndexError(f"column index out of range [0, {spec.cols})")
    ucols = cols.astype(np.uint64)
    kind = spec.kind
    if kind is SketchKind.COUNT_SKETCH:
        out = np.zeros((spec.rows, cols.size))
        bucket, sign = _count_buckets(spec, ucols)
        out[bucket, np.arange(cols.size)] = sign
        return out
    if kind is SketchKind.COMPOSED:
        cf = spec.count_factor()
        bucket, sign = _count_buckets(cf, ucols)
        return sketch_block(spec.gaussian_factor(), bucket) * sign
    rows = np.arange(spec.rows, dtype=np.uint64)[:, None]
    tag = _TAG[kind]
    if kind is SketchKind.SIGN:
        bit = counter_hash(spec.seed, tag, ucols[None, :], rows) >> np.uint64(63)
        return (1.0 - 2.0 * bit.astype(np.float64)) * spec.scale
    # Box-Muller on two independent counter lanes
    u1 = _uniform_open(counter_hash(spec.seed, tag, ucols[None, :], rows, lane=0))
    u2 = _uniform_open(counter_hash(spec.seed, tag, ucols[None, :], rows, lane=1))
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
    return z * spec.scale


def sketch_column(spec: SketchSpec, j: int) -> np.ndarray:
    """Column ``j`` of the sketch matrix (length ``rows``)."""
    if not 0 <= j < spec.cols:
        raise IndexError(f"column {j} out of range [0, {spec.cols})")
    return sketch_block(spec, [j])[:, 0]


def dense(spec: SketchSpec) -> np.ndarray:
    """Materialize the whole matrix. For tests and small instances only."""
    return sketch_block(spec, np.arange(spec.cols))


def count_sketch_hash(spec: SketchSpec):
    """(bucket, sign) arrays for every column of a CountSketch spec."""
    if spec.kind is not SketchKind.COUNT_SKETCH:
        raise ValueError("count_sketch_hash needs a CountSketch spec")
    return _count_buckets(spec, np.arange(spec.cols, dtype=np.uint64))


def _blocks(total: int, size: int = BLOCK) -> Iterable[np.ndarray]:
    for start in range(0, total, size):
        yield np.arange(start, min(total, start + size))


def apply_left(spec: SketchSpec, A: ArrayLike) -> np.ndarray:
    """``S @ A`` accumulated block by block over the columns of ``S``."""
    a = as_array(A)
    if spec.cols != a.shape[0]:
        raise DimensionError(f"sketch has {spec.cols} cols, A has {a.shape[0]} rows")
    if spec.kind is SketchKind.COUNT_SKETCH:
        bucket, sign = count_sketch_hash(spec)
        out = np.zeros((spec.rows, a.shape[1]))
        np.add.at(out, bucket, sign[:, None] * a)
        return out
    if spec.kind is SketchKind.COMPOSED:
        return apply_left(spec.gaussian_factor(), apply_left(spec.count_factor(), a))
    out = np.zeros((spec.rows, a.shape[1]))
    for cols in _blocks(spec.cols):
        out += sketch_block(spec, cols) @ a[cols]
    return out


def apply_right(A: ArrayLike, spec: SketchSpec) -> np.ndarray:
    """``A @ S.T``: output column ``i`` is ``A`` times row ``i`` of ``S``."""
    a = as_array(A)
    if spec.cols != a.shape[1]:
        raise DimensionError(f"sketch has {spec.cols} cols, A has {a.shape[1]} columns")
    return apply_left(spec, a.T).T


def embedding_distortion(spec: SketchSpec, V) -> float:
    """Worst relative error ``| ||Sv||^2 - ||v||^2 | / ||v||^2`` over the rows of ``V``."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    norms = np.sum(V * V, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero vector has no relative distortion")
    SV = apply_left(spec, V.T)
    return float(np.max(np.abs(np.sum(SV * SV, axis=0) - norms) / norms))
