"""Command-line entry points.

    sketchfactor solve-kmeans  A.txt --k 3 --eps 0.5
    sketchfactor solve-sdl     A.txt --k 3 --r 1
    sketchfactor stream-kmeans --stream updates.txt --mode turnstile --k 2
    sketchfactor stream-sdl    --stream rows.txt --mode rows --k 2 --r 1 --dmax 1
    sketchfactor random-order  --stream rows.txt --k 3 --alpha 0.01
    sketchfactor gen-hard      --n 2000 --d 100 --t 8 --alpha 0.0002 --out hard.txt
    sketchfactor run           --config experiment.cfg --seed 3

Solutions go to stdout as JSON (``--out json``) or long-form CSV
(``--out csv``, columns ``matrix,row,col,value``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import List, Optional

import numpy as np

from .hardinstance import HardInstanceSpec, generate, planted_copies
from .harness import emit_report, load_config, run_experiment
from .numerics import CapExceeded, read_design_matrix
from .solvers.guess import guess_sketch_kmeans, guess_sketch_sdl
from .solvers.oracles import DEFAULT_CAP
from .solvers.ptas import ptas_kmeans, ptas_sdl
from .solvers.random_order import random_order_kmeans
from .stream import SketchSizes, SketchState, read_rows, read_turnstile, write_rows


def _common(p: argparse.ArgumentParser, r: bool = False) -> None:
    p.add_argument("--k", type=int, required=True)
    if r:
        p.add_argument("--r", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=float, default=DEFAULT_CAP)
    p.add_argument("--out", choices=("json", "csv"), default="json")


def _stream_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stream", required=True)
    p.add_argument("--mode", choices=("turnstile", "rows", "random-order"), default="turnstile")
    for name, default in (("cs", 4.0), ("ct", 8.0), ("cw", 4.0)):
        p.add_argument(f"--{name}", type=float, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchfactor", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-kmeans", help="offline k-means on a design-matrix file")
    p.add_argument("input")
    _common(p)

    p = sub.add_parser("solve-sdl", help="offline r-sparse dictionary learning")
    p.add_argument("input")
    _common(p, r=True)

    p = sub.add_parser("stream-kmeans", help="k-means from a turnstile or row stream")
    _stream_args(p)
    p.add_argument("--alpha", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("stream-sdl", help="discrete sparse dictionary learning from a stream")
    _stream_args(p)
    p.add_argument("--dmax", type=int, default=1)
    _common(p, r=True)

    p = sub.add_parser("random-order", help="k-means over a randomly ordered row stream")
    p.add_argument("--stream", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--c3", type=float, default=4.0)
    p.add_argument("--shuffle-seed", type=int, default=None)
    _common(p)

    p = sub.add_parser("gen-hard", help="write a planted hard instance as a row stream")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--gamma", type=int, default=0)
    p.add_argument("--gamma-auto", action="store_true")
    p.add_argument("--max-rows", type=int, default=10**7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run an experiment from a key=value config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="run this single seed")
    for name, kind in (("k", int), ("r", int), ("n", int), ("d", int), ("eps", float),
                       ("alpha", float), ("cap", float), ("threads", int)):
        p.add_argument(f"--{name}", type=kind, default=None)
    p.add_argument("--problem", default=None)
    p.add_argument("--mode", default=None)
    p.add_argument("--out", default=None, help="report path")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    return parser


def _render(fmt: str, X, D, metrics: dict) -> str:
    if fmt == "json":
        return json.dumps({**metrics, "X": np.asarray(X).tolist(), "D": np.asarray(D).tolist()}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["matrix", "row", "col", "value"])
    for key, value in metrics.items():
        w.writerow([key, 0, 0, value])
    for name, M in (("X", X), ("D", D)):
        for (i, j), v in np.ndenumerate(np.asarray(M)):
            w.writerow([name, i, j, repr(float(v))])
    return buf.getvalue()


def _open_stream(path: str, mode: str, seed: int):
    with open(path) as fh:
        head = fh.readline().split()
    kind = head[0] if head else ""
    if mode == "turnstile":
        if kind != "turnstile":
            raise SystemExit(f"{path}: --mode turnstile needs a 'turnstile n d' file")
        return read_turnstile(path)
    if kind != "rows":
        raise SystemExit(f"{path}: --mode {mode} needs a 'rows n d' file")
    return read_rows(path, shuffle_seed=seed if mode == "random-order" else None)


def _sketch(args, problem: str) -> SketchState:
    n, d, items = _open_stream(args.stream, args.mode, args.seed)
    if problem == "kmeans":
        z = SketchSizes.for_kmeans(n, args.k, args.eps, args.cs, args.ct, args.cw)
    else:
        z = SketchSizes.for_discrete_sdl(n, args.k, args.r, args.dmax, args.eps, args.cs, args.ct, args.cw)
    st = SketchState.create(n, d, z.s, z.t, z.w, seed=args.seed, strict_rows=args.mode != "turnstile")
    for item in items:
        if args.mode == "turnstile":
            st.ingest_turnstile(item)
        else:
            st.ingest_row(*item)
    return st


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (CapExceeded, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    cmd = args.command
    if cmd in ("solve-kmeans", "solve-sdl"):
        A = read_design_matrix(args.input)
        if cmd == "solve-kmeans":
            pair = ptas_kmeans(A, args.k, args.eps, seed=args.seed, cap=args.cap)
        else:
            pair = ptas_sdl(A, args.k, args.r, args.eps, seed=args.seed, cap=args.cap)
        sys.stdout.write(_render(args.out, pair.X, pair.D, {"cost": pair.cost}))
        return 0
    if cmd == "stream-kmeans" and args.mode == "random-order":
        n, d, rows = _open_stream(args.stream, "random-order", args.seed)
        pair = random_order_kmeans(rows, n, d, args.k, args.eps, args.alpha, seed=args.seed)
        sys.stdout.write(_render(args.out, pair.X, pair.D, {"cost": pair.cost, "shuffle_seed": args.seed,
                                                            "peak_words": pair.info["peak_words"]}))
        return 0
    if cmd in ("stream-kmeans", "stream-sdl"):
        st = _sketch(args, "kmeans" if cmd == "stream-kmeans" else "sdl")
        if cmd == "stream-kmeans":
            sol = guess_sketch_kmeans(st, args.k, args.eps, cap=args.cap)
        else:
            sol = guess_sketch_sdl(st, args.k, args.r, args.dmax, args.eps, cap=args.cap)
        sys.stdout.write(_render(args.out, sol.X, sol.D, {"estimated_cost": sol.score,
                                                          "resident_words": st.resident_words,
                                                          "peak_words": st.peak_words}))
        return 0
    if cmd == "random-order":
        shuffle = args.seed if args.shuffle_seed is None else args.shuffle_seed
        n, d, rows = read_rows(args.stream, shuffle_seed=shuffle)
        print(f"shuffle seed {shuffle}", file=sys.stderr)
        pair = random_order_kmeans(rows, n, d, args.k, args.eps, args.alpha, c3=args.c3, seed=args.seed)
        sys.stdout.write(_render(args.out, pair.X, pair.D, {"cost": pair.cost, "shuffle_seed": shuffle,
                                                            "peak_words": pair.info["peak_words"]}))
        return 0
    if cmd == "gen-hard":
        k = args.k or args.d
        gamma = planted_copies(args.n, args.d, args.t, k) if args.gamma_auto else args.gamma
        if args.gamma_auto:
            print(f"gamma {gamma}", file=sys.stderr)
        inst = generate(HardInstanceSpec(args.n, args.d, args.t, args.alpha, k, gamma, args.seed),
                        max_rows=args.max_rows)
        write_rows(args.out, inst.A)
        return 0
    if cmd == "run":
        overrides = {name: getattr(args, name) for name in
                     ("k", "r", "n", "d", "eps", "alpha", "cap", "threads", "problem", "mode", "out", "format")}
        if args.seed is not None:
            overrides["seeds"] = [args.seed]
        cfg = load_config(args.config, overrides)
        report = run_experiment(cfg)
        text = emit_report(report, cfg.out or "-", cfg.format)
        if not cfg.out:
            sys.stdout.write(text)
        return 0
    raise AssertionError(cmd)

