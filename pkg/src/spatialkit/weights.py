"""Spatial weight matrices: contiguity and kernel construction, lags, subsets.

A :class:`WeightsMatrix` wraps a scipy CSR matrix with no diagonal entries
plus provenance (construction kind, row-standardization flag, islands).
Row-standardizing keeps the spatial-lag coefficient search interval inside
the unit spectral radius, so the log-determinant term stays finite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geodata import MetaDataset, _polygons_of

DENSE_EIGEN_CAP = 5000

__all__ = [
    "WeightsMatrix",
    "build_contiguity",
    "build_gaussian",
    "build_knn",
    "row_standardize",
    "spatial_lag",
]


@dataclass
class WeightsMatrix:
    n: int
    matrix: sp.csr_matrix  # nonnegative, zero diagonal
    kind: str  # gaussian-knn | queen | rook | knn-binary
    row_standardized: bool = False
    islands: frozenset[int] = field(default_factory=frozenset)

    def neighbors(self, i: int) -> np.ndarray:
        row = self.matrix.getrow(i)
        return row.indices

    def degree(self) -> np.ndarray:
        return np.diff(self.matrix.indptr)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def eigenvalues(self) -> np.ndarray:
        """Dense eigenvalues (for the spatial-lag log-determinant).

        Refuses beyond n=5000: dense eigendecomposition past desk scale is a
        capacity error, not a silent stall.
        """
        if self.n > DENSE_EIGEN_CAP:
            raise ValueError(
                f"dense eigenvalue computation refused for n={self.n} > {DENSE_EIGEN_CAP}; "
                "reduce the number of units"
            )
        dense = self.matrix.toarray()
        if _is_symmetric(dense):
            return np.linalg.eigvalsh(dense)
        return np.linalg.eigvals(dense)

    def subset(self, indices) -> "WeightsMatrix":
        """Restrict to a unit subset, preserving kind and re-standardizing."""
        idx = np.asarray(indices, dtype=int)
        sub = self.matrix[idx][:, idx].tocsr()
        out = WeightsMatrix(
            n=len(idx),
            matrix=sub,
            kind=self.kind,
            row_standardized=False,
            islands=_find_islands(sub),
        )
        return row_standardize(out) if self.row_standardized else out

    def to_json(self) -> dict:
        coo = self.matrix.tocoo()
        triplets = sorted(
            ([int(i), int(j), float(v)] for i, j, v in zip(coo.row, coo.col, coo.data)),
            key=lambda t: (t[0], t[1]),
        )
        return {
            "n": self.n,
            "triplets": triplets,
            "kind": self.kind,
            "row_standardized": self.row_standardized,
            "islands": sorted(self.islands),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "WeightsMatrix":
        n = payload["n"]
        trip = payload["triplets"]
        rows = [t[0] for t in trip]
        cols = [t[1] for t in trip]
        vals = [t[2] for t in trip]
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(
            n=n,
            matrix=mat,
            kind=payload["kind"],
            row_standardized=payload["row_standardized"],
            islands=frozenset(payload.get("islands", [])),
        )


def _is_symmetric(dense: np.ndarray) -> bool:
    return np.array_equal(dense, dense.T)


def _find_islands(matrix: sp.csr_matrix) -> frozenset[int]:
    return frozenset(int(i) for i in np.flatnonzero(np.diff(matrix.indptr) == 0))


def _build_matrix(n, rows, cols, vals) -> sp.csr_matrix:
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    mat.setdiag(0)
    mat.eliminate_zeros()
    return mat


# ---------------------------------------------------------------------------
# construction


def build_contiguity(md: MetaDataset, rule: str = "queen") -> WeightsMatrix:
    """Binary contiguity weights from shared boundary geometry.

    queen: units sharing at least one vertex are neighbors.
    rook:  units sharing an edge (a boundary segment of positive length).

    Detection is by exact shared vertices/edges, which is exact for meshes
    whose polygons share boundary coordinates (lattices, census geographies).
    """
    if rule not in ("queen", "rook"):
        raise ValueError(f"contiguity rule must be 'queen' or 'rook', got {rule!r}")
    n = len(md)
    vertex_owner: dict[tuple[float, float], set[int]] = {}
    edge_owner: dict[tuple, set[int]] = {}
    for i, unit in enumerate(md.units):
        for rings in _polygons_of(unit.geometry):
            for ring in rings:
                for a, b in zip(ring[:-1], ring[1:]):
                    vertex_owner.setdefault(a, set()).add(i)
                    edge = (a, b) if a <= b else (b, a)
                    edge_owner.setdefault(edge, set()).add(i)

    pairs: set[tuple[int, int]] = set()
    owner = vertex_owner if rule == "queen" else edge_owner
    for owners in owner.values():
        if len(owners) > 1:
            members = sorted(owners)
            for ai in range(len(members)):
                for bi in range(ai + 1, len(members)):
                    pairs.add((members[ai], members[bi]))

    rows, cols = [], []
    for i, j in pairs:
        rows += [i, j]
        cols += [j, i]
    mat = _build_matrix(n, rows, cols, np.ones(len(rows)))
    return WeightsMatrix(n=n, matrix=mat, kind=rule, islands=_find_islands(mat))


def _pairwise_distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def build_gaussian(md: MetaDataset, k: int = 8) -> WeightsMatrix:
    """Adaptive Gaussian kernel weights over the k nearest centroids.

    For unit i with distance d_ik to its k-th nearest neighbor, the k nearest
    units j get w_ij = exp(-0.5 (d_ij / d_ik)^2); everything else is zero.
    Neighbor ties (duplicate centroids included) are broken by unit order.
    """
    n = len(md)
    if not (1 <= k < n):
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    coords = md.centroids
    dist = _pairwise_distances(coords)
    np.fill_diagonal(dist, np.inf)
    if np.any(dist[np.isfinite(dist)] == 0):
        warnings.warn("duplicate centroids present; k-NN ties broken by unit order", stacklevel=2)

    rows, cols, vals = [], [], []
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")  # stable: ties by unit order
        nearest = order[:k]
        bandwidth = dist[i, nearest[-1]]
        for j in nearest:
            if bandwidth == 0:
                w = 1.0  # coincident centroids
            else:
                w = float(np.exp(-0.5 * (dist[i, j] / bandwidth) ** 2))
            rows.append(i)
            cols.append(int(j))
            vals.append(w)
    mat = _build_matrix(n, rows, cols, vals)
    return WeightsMatrix(n=n, matrix=mat, kind="gaussian-knn", islands=_find_islands(mat))


def build_knn(md: MetaDataset, k: int = 8) -> WeightsMatrix:
    """Binary k-nearest-neighbor weights (ties broken by unit order)."""
    n = len(md)
    if not (1 <= k < n):
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    dist = _pairwise_distances(md.centroids)
    np.fill_diagonal(dist, np.inf)
    rows, cols = [], []
    for i in range(n):
        nearest = np.argsort(dist[i], kind="stable")[:k]
        rows += [i] * k
        cols += [int(j) for j in nearest]
    mat = _build_matrix(n, rows, cols, np.ones(len(rows)))
    return WeightsMatrix(n=n, matrix=mat, kind="knn-binary", islands=_find_islands(mat))


def row_standardize(w: WeightsMatrix) -> WeightsMatrix:
    """Divide each non-island row by its sum; islands stay zero rows."""
    mat = w.matrix.tocsr(copy=True)
    sums = np.asarray(mat.sum(axis=1)).ravel()
    scale = np.ones_like(sums)
    nz = sums > 0
    scale[nz] = 1.0 / sums[nz]
    mat = sp.diags(scale) @ mat
    return WeightsMatrix(
        n=w.n,
        matrix=mat.tocsr(),
        kind=w.kind,
        row_standardized=True,
        islands=w.islands,
    )


def spatial_lag(w: WeightsMatrix, x) -> np.ndarray:
    """(Wx)_i = sum_j w_ij x_j; island rows yield 0.

    Assumes a row-standardized matrix when the lag is meant as a neighbor
    average. NaNs in x propagate only into rows that touch them.
    """
    arr = np.asarray(x, dtype=float)
    if arr.shape[0] != w.n:
        raise ValueError(f"vector length {arr.shape[0]} != n={w.n}")
    return w.matrix @ arr
