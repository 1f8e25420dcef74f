"""Experiment driver: planted data, solver dispatch, oracles and reports.

A run is fully determined by its :class:`ExperimentConfig`. Every seed
generates its own instance, solves it in the configured mode, compares the
result against the strongest affordable oracle and yields one record. Records
come back in seed order whatever the thread count, and wall time is only
recorded when asked for, so two runs of one config give byte-identical
reports.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .numerics import CapExceeded, DesignMatrix, frob_cost
from .sketch import SketchSpec
from .solvers.guess import guess_sketch_kmeans, guess_sketch_sdl
from .solvers.oracles import DEFAULT_CAP, brute_force_kmeans, lloyd
from .solvers.ptas import brute_force_sdl, ptas_kmeans, ptas_sdl
from .solvers.random_order import random_order_kmeans
from .stream import SketchSizes, SketchState, matrix_to_updates

PROBLEMS = ("kmeans", "sdl", "discrete-sdl")
MODES = ("offline", "turnstile", "rows", "random-order")
SUPPORTED = {
    "kmeans": MODES,
    "sdl": ("offline",),
    "discrete-sdl": ("turnstile", "rows"),
}

RECORD_FIELDS = (
    "seed", "status", "reason", "true_cost", "oracle_cost", "oracle", "certifying",
    "ratio", "success", "resident_words", "peak_words", "wall_time",
)


@dataclass
class ExperimentConfig:
    problem: str = "kmeans"
    mode: str = "offline"
    n: int = 8
    d: int = 5
    k: int = 2
    r: int = 1
    dmax: int = 1
    eps: float = 0.5
    alpha: float = 1.0
    sigma: float = 1.0
    separation: float = 6.0
    cs: float = 4.0
    ct: float = 8.0
    cw: float = 4.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 4.0
    sketch_s: Optional[str] = None
    sketch_t: Optional[str] = None
    sketch_w: Optional[str] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    cap: float = DEFAULT_CAP
    out: Optional[str] = None
    format: str = "json"
    threads: int = 1
    timing: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if self.mode not in SUPPORTED[self.problem]:
            raise ValueError(f"mode {self.mode!r} is not available for {self.problem}")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if min(self.n, self.d, self.k) < 1 or not 1 <= self.r <= self.k:
            raise ValueError("need n, d, k >= 1 and 1 <= r <= k")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        return self


# -- config files -------------------------------------------------------------


def parse_seeds(text: str) -> List[int]:
    """``"0,3,7"`` or ``"0-99"`` (inclusive) or a mix of both."""
    seeds: List[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _coerce(name: str, value: str):
    kind = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}[name]
    if name == "seeds":
        return parse_seeds(value)
    if kind == "bool":
        return value.strip().lower() in ("1", "true", "yes", "on")
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if value.strip().lower() in ("", "none"):
        return None
    return value.strip()


def parse_config(text: str, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment. ``overrides`` win."""
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return ExperimentConfig(**values).validate()


def load_config(path, overrides=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides)


# -- planted data ---------------------------------------------------------------


def gen_planted(problem: str, n: int, d: int, k: int, r: int = 1, sigma: float = 0.0,
                separation: float = 6.0, seed: int = 0, dmax: int = 1) -> Tuple[DesignMatrix, dict]:
    """Synthetic instance with known structure.

    ``kmeans``: ``k`` centers at pairwise distance at least ``separation``,
    balanced labels, Gaussian noise of scale ``sigma``. ``sdl``: unit-norm
    dictionary rows, random ``r``-supports with N(0,1) coefficients.
    ``discrete-sdl``: same with integer coefficients in ``[-dmax, dmax]``
    excluding 0.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    if problem == "kmeans":
        if k <= d:
            Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
            C = separation / math.sqrt(2) * Q[:k]
        else:
            C = rng.normal(size=(k, d))
            gaps = [np.linalg.norm(C[i] - C[j]) for i in range(k) for j in range(i)]
            C *= separation / min(gaps)
        labels = np.arange(n) % k
        X = np.eye(k)[labels]
        D = C
    elif problem in ("sdl", "discrete-sdl"):
        D = rng.normal(size=(k, d))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        X = np.zeros((n, k))
        for i in range(n):
            S = rng.choice(k, size=r, replace=False)
            if problem == "sdl":
                X[i, S] = rng.normal(size=r)
            else:
                X[i, S] = rng.integers(1, dmax + 1, size=r) * rng.choice([-1, 1], size=r)
        labels = None
    else:
        raise ValueError(f"unknown problem {problem!r}")
    A = X @ D + sigma * rng.normal(size=(n, d))
    truth = {"X": X, "D": D, "labels": labels, "cost": frob_cost(A, X, D)}
    return DesignMatrix(A), truth


# -- per-seed runs ------------------------------------------------------------------


def _oracle(cfg: ExperimentConfig, A: np.ndarray, truth: dict, seed: int):
    """``(cost, name, certifying)`` for the best affordable reference."""
    if cfg.problem == "kmeans":
        if float(cfg.k) ** cfg.n <= cfg.cap:
            return brute_force_kmeans(A, cfg.k, cap=cfg.cap).cost, "brute-force", True
        return lloyd(A, cfg.k, seed=seed, restarts=50).cost, "lloyd-upper-bound", False
    if cfg.problem == "sdl":
        if float(math.comb(cfg.k, cfg.r)) ** cfg.n <= min(cfg.cap, 20000):
            return brute_force_sdl(A, cfg.k, cfg.r, cap=cfg.cap).cost, "exhaustive-patterns", False
        return truth["cost"], "planted-upper-bound", False
    return truth["cost"], "construction", cfg.sigma == 0


def _sketch_state(cfg: ExperimentConfig, A: np.ndarray, seed: int) -> SketchState:
    n, d = A.shape
    if cfg.problem == "kmeans":
        z = SketchSizes.for_kmeans(n, cfg.k, cfg.eps, cfg.cs, cfg.ct, cfg.cw)
    else:
        z = SketchSizes.for_discrete_sdl(n, cfg.k, cfg.r, cfg.dmax, cfg.eps, cfg.cs, cfg.ct, cfg.cw)
    strict = cfg.mode == "rows"
    lines = (cfg.sketch_s, cfg.sketch_t, cfg.sketch_w)
    if all(lines):
        # explicit "kind rows cols seed" specs pin the maps for every seed
        st = SketchState(n, d, *(SketchSpec.from_line(x) for x in lines), strict_rows=strict)
    elif any(lines):
        raise ValueError("give all three of sketch_s, sketch_t, sketch_w or none")
    else:
        st = SketchState.create(n, d, z.s, z.t, z.w, seed=seed, strict_rows=strict)
    rng = np.random.default_rng([seed, 7])
    if cfg.mode == "rows":
        for i in rng.permutation(n):
            st.ingest_row(int(i), A[i])
    else:
        ups = matrix_to_updates(A, rng, split=2)
        for u in (ups[j] for j in rng.permutation(len(ups))):
            st.ingest_turnstile(u)
    return st


def _solve(cfg: ExperimentConfig, A: np.ndarray, seed: int):
    """``(true_cost, resident_words, peak_words)``."""
    if cfg.mode == "offline":
        if cfg.problem == "kmeans":
            pair = ptas_kmeans(A, cfg.k, cfg.eps, seed=seed, cap=cfg.cap, c1=cfg.c1, c2=cfg.c2)
        else:
            pair = ptas_sdl(A, cfg.k, cfg.r, cfg.eps, seed=seed, cap=cfg.cap, c1=cfg.c1, c2=cfg.c2)
        return pair.cost, A.size, A.size
    if cfg.mode == "random-order":
        order = np.random.default_rng([seed, 11]).permutation(A.shape[0])
        pair = random_order_kmeans(((int(i), A[i]) for i in order), A.shape[0], A.shape[1], cfg.k,
                                   cfg.eps, cfg.alpha, c3=cfg.c3, seed=seed)
        return pair.cost, pair.info["bound_words"], pair.info["peak_words"]
    st = _sketch_state(cfg, A, seed)
    if cfg.problem == "kmeans":
        sol = guess_sketch_kmeans(st, cfg.k, cap=cfg.cap)
    else:
        sol = guess_sketch_sdl(st, cfg.k, cfg.r, cfg.dmax, cap=cfg.cap)
    return sol.evaluate(A).cost, st.resident_words, st.peak_words


def _ratio(cost: float, ref: float) -> float:
    if ref > 0:
        return cost / ref
    return 1.0 if cost <= 1e-9 else math.inf


def run_seed(cfg: ExperimentConfig, seed: int) -> dict:
    problem = cfg.problem
    A, truth = gen_planted(problem, cfg.n, cfg.d, cfg.k, cfg.r, cfg.sigma, cfg.separation, seed, cfg.dmax)
    a = np.asarray(A)
    rec = dict.fromkeys(RECORD_FIELDS)
    rec.update(seed=seed, status="ok", reason="")
    start = time.perf_counter()
    try:
        cost, resident, peak = _solve(cfg, a, seed)
        ref, name, certifying = _oracle(cfg, a, truth, seed)
    except CapExceeded as exc:
        rec.update(status="skipped", reason=str(exc))
        return rec
    ratio = _ratio(cost, ref)
    rec.update(true_cost=cost, oracle_cost=ref, oracle=name, certifying=certifying,
               ratio=float(f"{ratio:.6g}"),
               success=bool(cost <= (1 + cfg.eps) * ref + 1e-6),
               resident_words=int(resident), peak_words=int(peak))
    if cfg.timing:
        rec["wall_time"] = time.perf_counter() - start
    return rec


def run_experiment(cfg: ExperimentConfig) -> dict:
    cfg.validate()
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            records = list(pool.map(lambda s: run_seed(cfg, s), cfg.seeds))
    else:
        records = [run_seed(cfg, s) for s in cfg.seeds]
    done = [r for r in records if r["status"] == "ok"]
    wins = sum(bool(r["success"]) for r in done)
    summary = {
        "seeds": len(records),
        "completed": len(done),
        "skipped": len(records) - len(done),
        "successes": wins,
        "success_rate": float(f"{wins / len(done):.6g}") if done else None,
        "certifying": all(r["certifying"] for r in done) if done else False,
    }
    conf = dataclasses.asdict(cfg)
    conf.pop("out")
    conf.pop("threads")
    return {"config": conf, "summary": summary, "records": records}


# -- reports ----------------------------------------------------------------------------


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}" if math.isfinite(v) else str(v)
    return str(v)


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for rec in report["records"]:
        writer.writerow([_csv_value(rec[f]) for f in RECORD_FIELDS])
    return buf.getvalue()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def emit_report(report: dict, path, fmt: str = "json") -> str:
    """Write ``report`` to ``path`` (``"-"`` for the return value only)."""
    if fmt not in ("json", "csv"):
        raise ValueError("format must be json or csv")
    text = report_json(report) if fmt == "json" else report_csv(report)
    if path not in (None, "-"):
        directory = os.path.dirname(os.path.abspath(path))
        if not os.access(directory, os.W_OK):
            raise PermissionError(f"cannot write to {path}")
        with open(path, "w") as fh:
            fh.write(text)
    return text
