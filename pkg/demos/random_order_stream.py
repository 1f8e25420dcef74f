"""
k-means over a shuffled row stream
===================================

When no single row matters much, a random prefix of the stream is enough to
place the centers; every later row is assigned as it passes. A sorted stream
breaks the assumption and shows why the order has to be random.
"""

import numpy as np

from sketchfactor.harness import gen_planted
from sketchfactor.solvers import lloyd, random_order_kmeans, sensitivity_upper_bounds

n, d, k, eps = 2000, 4, 3, 0.5
A, _ = gen_planted("kmeans", n, d, k, sigma=1.0, seed=0)
a = np.asarray(A)

sigma, total = sensitivity_upper_bounds(a, k)
print(f"largest sensitivity bound {sigma.max():.4f}, total {total:.1f}")
alpha = 20 / n
offline = lloyd(a, k).cost

for label, order in (("shuffled", np.random.default_rng(1).permutation(n)), ("sorted", np.argsort(a[:, 0]))):
    pair = random_order_kmeans(((int(i), a[i]) for i in order), n, d, k, eps, alpha, c3=0.1, solver="lloyd")
    print(f"{label:>8}: cost ratio {pair.cost / offline:.3f}, prefix {pair.info['prefix']}, "
          f"peak {pair.info['peak_words']} words")
