"""Exact oracles, baselines, offline approximation pipelines and sketch recoveries."""

from .guess import SketchedSolution, guess_sketch_kmeans, guess_sketch_sdl, sketched_cost
from .oracles import (
    DEFAULT_CAP,
    assign_kmeans,
    brute_force_kmeans,
    canonical_labelings,
    count_partitions,
    lloyd,
    sparse_code,
)
from .ptas import (
    LeverageSample,
    PatternSolution,
    SparsityPattern,
    brute_force_sdl,
    leverage_sample,
    pattern_solver,
    ptas_kmeans,
    ptas_sdl,
    sketched_least_squares,
)
from .random_order import random_order_kmeans, sensitivity_upper_bounds

__all__ = [
    "DEFAULT_CAP",
    "LeverageSample",
    "PatternSolution",
    "SketchedSolution",
    "SparsityPattern",
    "assign_kmeans",
    "brute_force_kmeans",
    "brute_force_sdl",
    "canonical_labelings",
    "count_partitions",
    "guess_sketch_kmeans",
    "guess_sketch_sdl",
    "leverage_sample",
    "lloyd",
    "pattern_solver",
    "ptas_kmeans",
    "ptas_sdl",
    "random_order_kmeans",
    "sensitivity_upper_bounds",
    "sketched_cost",
    "sketched_least_squares",
    "sparse_code",
]
