"""
Clustering a matrix that is only ever seen as a stream of updates
==================================================================

Every entry of A arrives as two noisy pieces that sum to the true value, in
random order. Only three small sketches are kept; the clustering is recovered
from them and compared against the exact optimum.
"""

import numpy as np

from sketchfactor.harness import gen_planted
from sketchfactor.solvers import brute_force_kmeans, guess_sketch_kmeans
from sketchfactor.stream import SketchSizes, SketchState, matrix_to_updates

n, d, k, eps = 8, 30, 2, 0.5
A, truth = gen_planted("kmeans", n, d, k, sigma=1.0, seed=3)

sizes = SketchSizes.for_kmeans(n, k, eps)
state = SketchState.create(n, d, sizes.s, sizes.t, sizes.w, seed=3)
rng = np.random.default_rng(0)
updates = matrix_to_updates(A, rng, split=2)
for j in rng.permutation(len(updates)):
    state.ingest_turnstile(updates[j])
print(f"{len(updates)} updates, sketch sizes s={sizes.s} t={sizes.t} w={sizes.w}")
print("space:", state.space_report(), "vs storing A:", n * d)

sol = guess_sketch_kmeans(state, k, eps)
pair = sol.evaluate(A)
opt = brute_force_kmeans(A, k).cost
print(f"sketched score {sol.score:.3f}, true cost {pair.cost:.3f}, optimum {opt:.3f}")
print("recovered labels:", pair.labels, " planted:", truth["labels"])

# the space only pays off once d is large relative to t + s + w/n; rows are
# folded in one column at a time so the scratch stays at s + t + w words
n2, d2 = 64, 400
big = SketchSizes.for_kmeans(n2, k, eps)
state = SketchState.create(n2, d2, big.s, big.t, big.w, seed=0, row_chunk=1)
for i, row in enumerate(np.random.default_rng(1).normal(size=(n2, d2))):
    state.ingest_row(i, row)
print(f"n={n2} d={d2}: peak {state.peak_words} words vs {n2 * d2} for A itself")
