"""Sketch-based k-means and sparse dictionary learning with exact oracles.

The package recovers both factors of ``A ~ X D`` from small linear sketches,
for ``X`` a cluster assignment or an r-sparse code.
"""

# solvers first: the coreset module reuses its exact assignment kernels
from .solvers import (
    assign_kmeans,
    brute_force_kmeans,
    guess_sketch_kmeans,
    guess_sketch_sdl,
    lloyd,
    ptas_kmeans,
    ptas_sdl,
    random_order_kmeans,
    sparse_code,
)
from .coreset import WeightedInstance, dictionary_coreset, lightweight_coreset_kmeans
from .dimreduce import ReducedInstance, lift_dictionary, reduce
from .numerics import (
    CapExceeded,
    DesignMatrix,
    DimensionError,
    DiscreteSparseCode,
    FactorPair,
    KMeansAssignment,
    NumericError,
    SparseCode,
    frob_cost,
    least_squares,
    pinv,
    read_design_matrix,
    write_design_matrix,
)
from .sketch import SketchKind, SketchSpec
from .stream import SketchSizes, SketchState, TurnstileUpdate
__version__ = "0.1.0"
