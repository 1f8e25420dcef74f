"""
Weighted row samples that preserve clustering cost
===================================================
"""

import numpy as np

from sketchfactor.coreset import coreset_error, dictionary_coreset, lightweight_coreset_kmeans
from sketchfactor.harness import gen_planted
from sketchfactor.numerics import KMeansAssignment, SparseCode

rng = np.random.default_rng(0)
A, _ = gen_planted("kmeans", 1000, 5, 3, sigma=1.0, seed=0)
W = lightweight_coreset_kmeans(A, 200, seed=0)
centers = [rng.normal(scale=3.0, size=(3, 5)) for _ in range(20)]
print(f"200 of 1000 rows, worst relative error over 20 center sets: "
      f"{coreset_error(W, A, centers, KMeansAssignment()):.3f}")

B, _ = gen_planted("sdl", 200, 6, 3, r=1, sigma=0.1, seed=0)
V = dictionary_coreset(B, 3, 1, 60, seed=0)
dicts = [rng.normal(size=(3, 6)) for _ in range(20)]
print(f"60 of 200 rows, worst error over 20 dictionaries: {coreset_error(V, B, dicts, SparseCode(1)):.3f}")
