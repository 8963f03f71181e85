"""Synthetic data generators and brute-force oracles.

Every pipeline stage is verified against data with planted parameters, so
generators and the independent oracles used to check results live together:
acceptance tests depend on exactly this one auxiliary component.
"""

from .generators import (
    SynthManifest,
    gen_gwr,
    gen_lattice,
    gen_sdm,
    gen_subgroups,
    make_demo_fixture,
    meta_to_geojson,
    write_fixture,
)
from .oracles import (
    adjacency_bruteforce,
    best_contiguous_bipartition,
    knn_bruteforce,
    moran_direct,
    moran_permutation,
    ols_normal_equations,
    spillover_bruteforce,
    wcss,
)

__all__ = [
    "SynthManifest",
    "gen_lattice",
    "gen_sdm",
    "gen_gwr",
    "gen_subgroups",
    "make_demo_fixture",
    "meta_to_geojson",
    "write_fixture",
    "moran_direct",
    "moran_permutation",
    "ols_normal_equations",
    "best_contiguous_bipartition",
    "wcss",
    "spillover_bruteforce",
    "knn_bruteforce",
    "adjacency_bruteforce",
]
