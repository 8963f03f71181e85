"""Directional spillover fields from local lag coefficients.

A neighbor j influences the focal unit i through j's local coefficient on
each spatially lagged variable, scaled by the weight w_ij. Each pairwise
magnitude is assigned to one of 16 compass sectors (index 0 = North,
clockwise, 22.5 degrees wide) by the bearing from i's centroid to j's, and
summed per sector. Display magnitudes are absolute values: the glyph radius
encodes strength, which cannot be negative; signs survive in the pairwise
map. The dependent-variable lag coefficient is carried as its own channel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geodata import MetaDataset
from .models import LocalFit
from .regionalize import Regionalization
from .weights import WeightsMatrix

SECTOR_COUNT = 16
SECTOR_WIDTH = 360.0 / SECTOR_COUNT
SECTOR_NAMES = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
    "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
]

RHO_CHANNEL = "lag:dependent"

__all__ = [
    "PairwiseSpillover",
    "SpilloverField",
    "ClusterSpillover",
    "pairwise_spillover",
    "bin_directions",
    "aggregate_clusters",
    "SECTOR_NAMES",
    "RHO_CHANNEL",
]


@dataclass
class PairwiseSpillover:
    """Signed spillover magnitudes S_ij per lagged variable, sparse over W."""

    variables: list[str]
    matrices: dict[str, sp.csr_matrix]  # (i, j) -> gamma_j * w_ij
    skipped_pairs: int  # pairs dropped for missing coefficients at j

    def entry(self, variable: str, i: int, j: int) -> float:
        return float(self.matrices[variable][i, j])


@dataclass
class SpilloverField:
    variables: list[str]
    per_variable: dict[str, np.ndarray]  # (n, 16) absolute magnitudes
    combined: np.ndarray  # (n, 16) sum over variables

    @property
    def n(self) -> int:
        return self.combined.shape[0]

    def to_json(self) -> dict:
        return {
            "directions": SECTOR_NAMES,
            "variables": self.variables,
            "per_variable": {v: self.per_variable[v].tolist() for v in self.variables},
            "combined": self.combined.tolist(),
        }


@dataclass
class ClusterSpillover:
    vectors: np.ndarray  # (k, 16) mean combined magnitude over members

    def to_json(self) -> dict:
        return {"directions": SECTOR_NAMES, "clusters": self.vectors.tolist()}


def pairwise_spillover(local: LocalFit, w: WeightsMatrix) -> PairwiseSpillover:
    """S_ij = (local lag coefficient at j) * w_ij for every w_ij > 0.

    Channels: one per lagged independent variable plus the dependent lag
    (rho) when present. Pairs whose source unit j lacks coefficients are
    skipped and counted.
    """
    if not w.row_standardized:
        raise ValueError("pairwise_spillover expects the row-standardized weights used by the fit")
    if w.n != local.n:
        raise ValueError(f"weights size {w.n} != local fit size {local.n}")

    channels: dict[str, np.ndarray] = {}
    for name, col in local.gamma_columns().items():
        channels[name] = col
    rho = local.rho_column()
    if rho is not None:
        channels[RHO_CHANNEL] = rho
    if not channels:
        raise ValueError("local fit has no lagged-variable coefficients (no WX terms, no Wy term)")

    coo = w.matrix.tocoo()
    matrices = {}
    skipped = 0
    for name, coef in channels.items():
        vals = coef[coo.col] * coo.data
        good = np.isfinite(vals)
        skipped += int((~good).sum())
        matrices[name] = sp.csr_matrix(
            (vals[good], (coo.row[good], coo.col[good])), shape=(w.n, w.n)
        )
    return PairwiseSpillover(variables=list(channels), matrices=matrices, skipped_pairs=skipped)


def bearing_sector(dx: float, dy: float) -> int:
    """Compass sector of the direction (dx east, dy north); 0 = N, clockwise."""
    bearing = np.degrees(np.arctan2(dx, dy)) % 360.0
    return int(((bearing + SECTOR_WIDTH / 2.0) % 360.0) // SECTOR_WIDTH)


def bin_directions(pairs: PairwiseSpillover, md: MetaDataset) -> SpilloverField:
    """Aggregate |S_ij| into 16 compass sectors per focal unit and variable.

    The sector of pair (i, j) comes from the bearing of j's centroid as seen
    from i's. Coincident centroids fall into sector 0 with a warning.
    """
    cent = md.centroids
    n = len(md)
    per_variable = {}
    warned = False
    for name in pairs.variables:
        coo = pairs.matrices[name].tocoo()
        field = np.zeros((n, 16))
        dx = cent[coo.col, 0] - cent[coo.row, 0]
        dy = cent[coo.col, 1] - cent[coo.row, 1]
        coincident = (dx == 0) & (dy == 0)
        if coincident.any() and not warned:
            warnings.warn("coincident centroids in spillover pairs assigned to sector 0", stacklevel=2)
            warned = True
        bearing = np.degrees(np.arctan2(dx, dy)) % 360.0
        sectors = (((bearing + SECTOR_WIDTH / 2.0) % 360.0) // SECTOR_WIDTH).astype(int)
        sectors[coincident] = 0
        np.add.at(field, (coo.row, sectors), np.abs(coo.data))
        per_variable[name] = field
    combined = np.zeros((n, 16))
    for field in per_variable.values():
        combined += field
    return SpilloverField(variables=list(pairs.variables), per_variable=per_variable, combined=combined)


def aggregate_clusters(field: SpilloverField, reg: Regionalization) -> ClusterSpillover:
    """Per cluster, the elementwise mean of member units' combined vectors."""
    frame_idx = reg.included if reg.included is not None else np.arange(reg.n)
    vectors = np.zeros((reg.k, 16))
    for c in range(reg.k):
        members = frame_idx[reg.labels == c]
        vectors[c] = field.combined[members].mean(axis=0)
    return ClusterSpillover(vectors=vectors)
