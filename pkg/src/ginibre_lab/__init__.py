"""Sampling and numerical verification toolkit for the Ginibre point process,
its Palm measure, and the geometry of its Voronoi cells.

Modules
-------
kernels        kernel constructors and pointwise algebra
spectral       eigen-decompositions, Fredholm determinants, resolvents
geometry       disk unions, half-plane intersections, Voronoi cells
sampling       exact point samplers
discrete_dpp   exact finite determinantal laws and domination checks
probabilities  incomplete-gamma machinery and closed-form identities
cell_stats     Monte Carlo estimators for typical-cell functionals
mc_engine      seeded streams and mergeable accumulators
cli            command line entry point
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    cell_stats,
    discrete_dpp,
    geometry,
    kernels,
    mc_engine,
    probabilities,
    sampling,
    spectral,
)
