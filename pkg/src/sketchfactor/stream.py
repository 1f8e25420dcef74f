"""Turnstile, row-arrival and random-order ingestion into linear sketches.

:class:`SketchState` maintains ``SA`` (``s x d``), ``AT`` (``n x t``) and
``W vec(A)`` (length ``w``) under updates. ``A`` itself is never stored;
each update regenerates only the sketch columns it touches.

Space is counted in words, one word per stored real number:

* ``resident_words`` is the accumulator storage ``s*d + n*t + w``;
* ``peak_words`` additionally includes the largest scratch buffer of freshly
  generated sketch columns and, in strict row mode, a ``ceil(n/64)``-word
  bitset of rows already seen.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Tuple, Union

import numpy as np

from .numerics import as_array
from .sketch import SketchKind, SketchSpec, apply_left, apply_right, sketch_block, sketch_column


class TurnstileUpdate(NamedTuple):
    i: int
    j: int
    delta: float


@dataclass
class SketchSizes:
    """Sketch dimensions with the constant multipliers exposed."""

    s: int
    t: int
    w: int

    @classmethod
    def for_kmeans(cls, n: int, k: int, eps: float, cs: float = 4.0, ct: float = 8.0, cw: float = 4.0):
        """``s = cs*k/eps``, ``t = ct*log(nk)/eps^2``, ``w = cw*k^2*log(n)/eps^3``."""
        s = math.ceil(cs * k / eps)
        t = math.ceil(ct * math.log(max(n * k, 2)) / eps**2)
        w = math.ceil(cw * k * k * math.log(max(n, 2)) / eps**3)
        return cls(s, t, w)

    @classmethod
    def for_discrete_sdl(cls, n: int, k: int, r: int, dmax: int, eps: float,
                         cs: float = 4.0, ct: float = 8.0, cw: float = 4.0):
        """Same shape as k-means with ``t ~ r log(nkD)`` and ``w ~ k^2 log(nD)``."""
        s = math.ceil(cs * k / eps)
        t = math.ceil(ct * r * math.log(max(n * k * dmax, 2)) / eps**2)
        w = math.ceil(cw * k * k * math.log(max(n * dmax, 2)) / eps**3)
        return cls(s, t, w)


class SketchState:
    """Accumulators for ``S A``, ``A T`` and ``W vec(A)``.

    Single writer. ``vec`` is row-major: entry ``(i, j)`` of ``A`` is
    coordinate ``i*d + j`` of ``vec(A)``.
    """

    def __init__(self, n: int, d: int, S: SketchSpec, T: SketchSpec, W: SketchSpec,
                 strict_rows: bool = False, row_chunk: int = 32):
        if S.cols != n or T.cols != d or W.cols != n * d:
            raise ValueError("sketch specs do not match the declared n x d shape")
        self.n, self.d = n, d
        self.S, self.T, self.W = S, T, W
        self.SA = np.zeros((S.rows, d))
        self.AT = np.zeros((n, T.rows))
        self.WvecA = np.zeros(W.rows)
        self.update_count = 0
        self.strict_rows = strict_rows
        self.row_chunk = max(1, int(row_chunk))
        self._seen = np.zeros(n, dtype=bool) if strict_rows else None
        self._bitset_words = math.ceil(n / 64) if strict_rows else 0
        self.peak_words = self.resident_words + self._bitset_words

    @classmethod
    def create(cls, n: int, d: int, s: int, t: int, w: int, seed: int,
               kinds: Tuple[str, str, str] = ("Sign", "Sign", "Sign"), **kw) -> "SketchState":
        """Build the three specs from one master seed."""
        rng = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
        S = SketchSpec(SketchKind(kinds[0]), s, n, int(rng[0]))
        T = SketchSpec(SketchKind(kinds[1]), t, d, int(rng[1]))
        W = SketchSpec(SketchKind(kinds[2]), w, n * d, int(rng[2]))
        return cls(n, d, S, T, W, **kw)

    @property
    def resident_words(self) -> int:
        return self.S.rows * self.d + self.n * self.T.rows + self.W.rows

    def _touch(self, scratch_words: int) -> None:
        self.peak_words = max(self.peak_words, self.resident_words + self._bitset_words + scratch_words)

    def ingest_turnstile(self, u: TurnstileUpdate) -> "SketchState":
        i, j, delta = int(u[0]), int(u[1]), float(u[2])
        if not (0 <= i < self.n and 0 <= j < self.d):
            raise IndexError(f"update ({i}, {j}) outside {self.n}x{self.d}")
        if not math.isfinite(delta):
            raise ValueError("non-finite delta")
        s_col = sketch_column(self.S, i)
        t_col = sketch_column(self.T, j)
        w_col = sketch_column(self.W, i * self.d + j)
        self._touch(s_col.size + t_col.size + w_col.size)
        self.SA[:, j] += delta * s_col
        self.AT[i] += delta * t_col
        self.WvecA += delta * w_col
        self.update_count += 1
        return self

    def ingest_row(self, i: int, row) -> "SketchState":
        """Add a whole row; equivalent to ``d`` turnstile updates on row ``i``."""
        row = np.asarray(row, dtype=np.float64).reshape(-1)
        if not 0 <= i < self.n:
            raise IndexError(f"row {i} outside [0, {self.n})")
        if row.size != self.d:
            raise ValueError(f"row has {row.size} entries, expected {self.d}")
        if not np.all(np.isfinite(row)):
            raise ValueError("non-finite row")
        if self.strict_rows:
            if self._seen[i]:
                raise ValueError(f"row {i} already arrived")
            self._seen[i] = True
        s_col = sketch_column(self.S, i)
        self.SA += np.outer(s_col, row)
        for start in range(0, self.d, self.row_chunk):
            cols = np.arange(start, min(self.d, start + self.row_chunk))
            t_blk = sketch_block(self.T, cols)
            w_blk = sketch_block(self.W, i * self.d + cols)
            self._touch(s_col.size + t_blk.size + w_blk.size)
            self.AT[i] += t_blk @ row[cols]
            self.WvecA += w_blk @ row[cols]
        self.update_count += 1
        return self

    def space_report(self) -> dict:
        return {
            "resident_words": self.resident_words,
            "peak_words": self.peak_words,
            "update_count": self.update_count,
        }

    def scratch_bound(self) -> int:
        """Largest scratch a single update may allocate."""
        chunk = min(self.row_chunk, self.d)
        return self.S.rows + chunk * (self.T.rows + self.W.rows)

    def dense_products(self, A) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Reference ``(SA, AT, W vec A)`` for a materialized ``A`` (tests only)."""
        a = as_array(A)
        return apply_left(self.S, a), apply_right(a, self.T), apply_left(self.W, a.reshape(-1, 1))[:, 0]


# -- stream files -----------------------------------------------------------


def read_turnstile(path: Union[str, os.PathLike]) -> Tuple[int, int, Iterator[TurnstileUpdate]]:
    """Header ``turnstile n d`` then lines ``i j delta``."""
    fh = open(path)
    head = fh.readline().split()
    if len(head) != 3 or head[0] != "turnstile":
        fh.close()
        raise ValueError(f"{path}: expected header 'turnstile n d'")
    n, d = int(head[1]), int(head[2])

    def updates():
        with fh:
            for line in fh:
                parts = line.split()
                if parts:
                    yield TurnstileUpdate(int(parts[0]), int(parts[1]), float(parts[2]))

    return n, d, updates()


def write_turnstile(path, n: int, d: int, updates) -> None:
    with open(path, "w") as fh:
        fh.write(f"turnstile {n} {d}\n")
        for i, j, delta in updates:
            fh.write(f"{int(i)} {int(j)} {float(delta)!r}\n")


def read_rows(path: Union[str, os.PathLike], shuffle_seed: Optional[int] = None):
    """Header ``rows n d`` then ``n`` lines of ``d`` decimals.

    Returns ``(n, d, iterator of (i, row))``. With ``shuffle_seed`` the arrival
    order is a seeded permutation (random-order mode); the seed is reported by
    the caller so the run can be replayed.
    """
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 3 or head[0] != "rows":
            raise ValueError(f"{path}: expected header 'rows n d'")
        n, d = int(head[1]), int(head[2])
        lines = [line for line in fh if line.strip()]
    if len(lines) < n:
        raise ValueError(f"{path}: stream shorter than declared n={n}")
    order = np.arange(n)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(n)

    def rows():
        for i in order:
            yield int(i), np.array([float(v) for v in lines[i].split()], dtype=np.float64)

    return n, d, rows()


def write_rows(path, A) -> None:
    a = as_array(A)
    with open(path, "w") as fh:
        fh.write(f"rows {a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def matrix_to_updates(A, rng: Optional[np.random.Generator] = None, split: int = 1):
    """Turnstile updates that materialize ``A``; ``split > 1`` adds cancelling noise pieces."""
    a = as_array(A)
    rng = rng or np.random.default_rng(0)
    ups = []
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if split <= 1:
                ups.append(TurnstileUpdate(i, j, float(a[i, j])))
                continue
            pieces = rng.normal(size=split - 1)
            ups.extend(TurnstileUpdate(i, j, float(p)) for p in pieces)
            ups.append(TurnstileUpdate(i, j, float(a[i, j] - pieces.sum())))
    return ups
