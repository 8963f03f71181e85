"""spatialkit: a workbench for neighborhood-effect analysis.

Pipeline: ingest geometry + tabular data into a SpatialFrame, build spatial
weights, fit global (OLS / spatial Durbin) and local (geographically
weighted) regressions, diagnose residual autocorrelation, regionalize the
local coefficient surfaces into contiguous clusters, and compute 16-sector
directional spillover fields. A session HTTP API and a batch CLI expose the
whole chain.
"""

from .diagnostics import correlation_matrix, morans_i, morans_i_permutation, scan_groups
from .geodata import (
    CensusDataset,
    MetaDataset,
    SpatialFrame,
    SubgroupDataset,
    join_frame,
    load_census,
    load_geometry,
    load_subgroups,
    minmax_normalize,
)
from .groups import GroupKey, GroupSeries, aggregate_rate, enumerate_groups
from .models import (
    GlobalFit,
    LocalFit,
    ModelSpec,
    fit_gwr_sdm,
    fit_ols,
    fit_sdm,
    select_bandwidth,
)
from .regionalize import (
    MergeTree,
    Regionalization,
    build_features,
    cluster_stats,
    constrained_cluster,
    leaf_order,
)
from .spillover import (
    ClusterSpillover,
    SpilloverField,
    aggregate_clusters,
    bin_directions,
    pairwise_spillover,
)
from .weights import WeightsMatrix, build_contiguity, build_gaussian, build_knn, row_standardize, spatial_lag

__version__ = "0.1.0"
