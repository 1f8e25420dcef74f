"""
Sparse dictionary learning by enumerating sparsity patterns
============================================================

Each row of A is a noisy multiple of one of three unit atoms. The pipeline
reduces the columns, keeps a small weighted set of rows, tries every sparsity
pattern on it and lifts the best dictionary back.
"""

import numpy as np

from sketchfactor.harness import gen_planted
from sketchfactor.solvers import brute_force_sdl, ptas_sdl

A, truth = gen_planted("sdl", 8, 5, 3, r=1, sigma=0.1, seed=5)

pair = ptas_sdl(A, k=3, r=1, eps=0.5, seed=5)
oracle = brute_force_sdl(A, 3, 1, tol=1e-10)
print(f"pipeline cost {pair.cost:.5f}, exhaustive oracle {oracle.cost:.5f}, planted {truth['cost']:.5f}")
print("patterns tried:", pair.info["patterns"], " objective monotone:", pair.info["monotone"])

# with r = k the constraint disappears and the answer is a truncated SVD
a = np.random.default_rng(0).normal(size=(8, 5))
tail = np.sum(np.linalg.svd(a, compute_uv=False)[3:] ** 2)
print(f"r=k cost {ptas_sdl(a, 3, 3, 0.5).cost:.5f} vs rank-3 SVD residual {tail:.5f}")
