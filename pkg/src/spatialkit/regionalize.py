"""Spatially constrained agglomerative clustering of local-model outputs.

Ward-style agglomeration in which only clusters adjacent in the contiguity
graph may merge, so every cluster at every cut is a connected region. The
merge dissimilarity is the exact within-cluster sum-of-squares increase
computed from running centroids. Constrained agglomeration cannot guarantee
monotone linkage values; inversions are recorded, not forbidden (cuts are by
merge count, never by dissimilarity threshold, so they are harmless).

The dendrogram's deterministic leaf order doubles as a 1D projection of the
map: each cluster at any cut occupies a contiguous run of leaf positions.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geodata import SpatialFrame, minmax_normalize
from .models import LocalFit
from .weights import WeightsMatrix

DEFAULT_K = 5

__all__ = [
    "MergeTree",
    "Regionalization",
    "build_features",
    "constrained_cluster",
    "leaf_order",
    "cluster_stats",
    "DEFAULT_K",
]


@dataclass
class MergeTree:
    """Agglomeration history in scipy convention.

    Leaves are 0..n-1; the t-th merge creates node n+t. ``merges`` rows are
    (left, right, dissimilarity, size) with left the earlier-created node.
    """

    n_leaves: int
    merges: list[tuple[int, int, float, int]]

    @property
    def n_components(self) -> int:
        return self.n_leaves - len(self.merges)

    def has_inversions(self) -> bool:
        heights = [m[2] for m in self.merges]
        return any(b < a for a, b in zip(heights, heights[1:]))

    def labels_at(self, k: int) -> np.ndarray:
        """Cluster labels after undoing the last merges down to k clusters."""
        if k > self.n_leaves:
            raise ValueError(f"k={k} exceeds the number of units ({self.n_leaves})")
        if k < self.n_components:
            raise ValueError(
                f"k={k} is below the number of connected components ({self.n_components}); "
                "disconnected units can never merge"
            )
        parent = list(range(self.n_leaves + len(self.merges)))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for t, (left, right, _, _) in enumerate(self.merges[: self.n_leaves - k]):
            node = self.n_leaves + t
            parent[find(left)] = node
            parent[find(right)] = node
        roots: dict[int, int] = {}
        labels = np.empty(self.n_leaves, dtype=int)
        for leaf in range(self.n_leaves):
            r = find(leaf)
            labels[leaf] = roots.setdefault(r, len(roots))
        return labels

    def to_json(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "merges": [[int(a), int(b), float(d), int(s)] for a, b, d, s in self.merges],
        }


@dataclass
class Regionalization:
    k: int
    labels: np.ndarray  # cluster id per clustered unit
    leaf_order: np.ndarray  # permutation of clustered unit indices
    feature_names: list[str]
    feature_matrix: np.ndarray  # standardized features the tree was built on
    tree: MergeTree
    included: np.ndarray = field(default=None)  # frame indices of clustered units

    @property
    def n(self) -> int:
        return len(self.labels)

    def segments(self) -> list[tuple[int, int, int]]:
        """(cluster id, start, end) runs partitioning the leaf order."""
        out = []
        pos = 0
        order_labels = self.labels[self.leaf_order]
        while pos < len(order_labels):
            end = pos
            while end < len(order_labels) and order_labels[end] == order_labels[pos]:
                end += 1
            out.append((int(order_labels[pos]), pos, end))
            pos = end
        return out

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster)

    def to_json(self) -> dict:
        return {
            "k": int(self.k),
            "labels": [int(v) for v in self.labels],
            "leaf_order": [int(v) for v in self.leaf_order],
            "merges": self.tree.to_json()["merges"],
            "segments": [[c, s, e] for c, s, e in self.segments()],
            "feature_names": self.feature_names,
        }


# ---------------------------------------------------------------------------
# features


def build_features(local: LocalFit, frame: SpatialFrame, variables=()) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Assemble and z-score the clustering features.

    Columns are every local coefficient surface plus the selected raw
    attributes; rows are the units with complete local coefficients (others
    are excluded with a warning). Returns (matrix, names, included indices).
    Constant columns standardize to zero with a warning so they cannot steer
    the merges.
    """
    names = list(local.coef_names)
    cols = [local.coefficients[:, j] for j in range(local.coefficients.shape[1])]
    for v in variables:
        names.append(v)
        cols.append(np.asarray(frame.variable(v), dtype=float))
    stacked = np.column_stack(cols)
    complete = np.all(np.isfinite(stacked), axis=1)
    if not complete.all():
        warnings.warn(
            f"{int((~complete).sum())} unit(s) lack complete features and are excluded from regionalization",
            stacklevel=2,
        )
    included = np.flatnonzero(complete)
    matrix = stacked[included]

    means = matrix.mean(axis=0)
    sds = matrix.std(axis=0)
    constant = sds == 0
    if constant.any():
        flat = [names[j] for j in np.flatnonzero(constant)]
        warnings.warn(f"constant feature column(s) standardized to zero: {', '.join(flat)}", stacklevel=2)
    sds = np.where(constant, 1.0, sds)
    return (matrix - means) / sds, names, included


# ---------------------------------------------------------------------------
# constrained agglomeration


def constrained_cluster(
    features: np.ndarray,
    contiguity: WeightsMatrix,
    k: int = DEFAULT_K,
) -> tuple[MergeTree, "Regionalization"]:
    """Ward-linkage agglomeration restricted to contiguity-graph neighbors.

    The candidate with minimal within-cluster sum-of-squares increase merges
    first; exact ties break on the smallest (min unit index) pair, making
    the tree fully deterministic. The tree is cut to k clusters and the leaf
    order computed, with cluster ids renumbered by first leaf position.
    """
    feats = np.asarray(features, dtype=float)
    n = feats.shape[0]
    if contiguity.kind not in ("queen", "rook"):
        raise ValueError(f"contiguity weights required (queen/rook), got kind={contiguity.kind!r}")
    if contiguity.n != n:
        raise ValueError(f"feature rows ({n}) != contiguity size ({contiguity.n})")
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    # Running cluster state, keyed by scipy-style node id.
    size = {i: 1 for i in range(n)}
    centroid = {i: feats[i].copy() for i in range(n)}
    rep = {i: i for i in range(n)}  # min unit index, for tie-breaking
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    coo = contiguity.matrix.tocoo()
    for a, b in zip(coo.row, coo.col):
        if a != b:
            adj[int(a)].add(int(b))
            adj[int(b)].add(int(a))

    def ward_delta(a: int, b: int) -> float:
        diff = centroid[a] - centroid[b]
        return (size[a] * size[b]) / (size[a] + size[b]) * float(diff @ diff)

    heap: list[tuple[float, int, int, int, int]] = []
    for a in range(n):
        for b in adj[a]:
            if a < b:
                heapq.heappush(heap, (ward_delta(a, b), rep[a], rep[b], a, b))

    alive = set(range(n))
    merges: list[tuple[int, int, float, int]] = []
    next_id = n
    while heap:
        delta, _, _, a, b = heapq.heappop(heap)
        if a not in alive or b not in alive or b not in adj[a]:
            continue  # stale entry from before one side last merged
        node = next_id
        next_id += 1
        sz = size[a] + size[b]
        centroid[node] = (size[a] * centroid[a] + size[b] * centroid[b]) / sz
        size[node] = sz
        rep[node] = min(rep[a], rep[b])
        neighbors = (adj[a] | adj[b]) - {a, b}
        adj[node] = neighbors
        for c in neighbors:
            adj[c].discard(a)
            adj[c].discard(b)
            adj[c].add(node)
        for dead in (a, b):
            alive.discard(dead)
            adj.pop(dead, None)
        alive.add(node)
        merges.append((min(a, b), max(a, b), float(delta), sz))
        for c in neighbors:
            lo_rep, hi_rep = sorted((rep[node], rep[c]))
            heapq.heappush(heap, (ward_delta(node, c), lo_rep, hi_rep, *sorted((node, c))))

    tree = MergeTree(n_leaves=n, merges=merges)
    order = leaf_order(tree)
    raw_labels = tree.labels_at(k)
    remap: dict[int, int] = {}
    for leaf in order:
        remap.setdefault(int(raw_labels[leaf]), len(remap))
    labels = np.array([remap[int(v)] for v in raw_labels], dtype=int)

    reg = Regionalization(
        k=int(labels.max()) + 1,
        labels=labels,
        leaf_order=order,
        feature_names=[],
        feature_matrix=feats,
        tree=tree,
        included=np.arange(n),
    )
    return tree, reg


def leaf_order(tree: MergeTree) -> np.ndarray:
    """Deterministic depth-first leaf order of the merge forest.

    At each internal node the earlier-created child (smaller node id, i.e.
    smaller merge index; for leaves, smaller unit index) is visited first.
    Roots of a forest are visited by ascending minimum unit index.
    """
    n = tree.n_leaves
    children: dict[int, tuple[int, int]] = {}
    used_as_child = set()
    min_leaf = {i: i for i in range(n)}
    for t, (left, right, _, _) in enumerate(tree.merges):
        node = n + t
        children[node] = (left, right)  # left is the earlier-created node
        used_as_child.update((left, right))
        min_leaf[node] = min(min_leaf[left], min_leaf[right])

    roots = [node for node in range(n + len(tree.merges)) if node not in used_as_child]
    roots.sort(key=lambda r: min_leaf[r])

    order = []
    for root in roots:
        stack = [root]
        while stack:
            node = stack.pop()
            if node < n:
                order.append(node)
                continue
            left, right = children[node]
            stack.append(right)
            stack.append(left)
    return np.array(order, dtype=int)


def cluster_stats(reg: Regionalization, frame: SpatialFrame, variables) -> dict[str, np.ndarray]:
    """Per-cluster raw means, min-max normalized across clusters per variable.

    The normalization feeds the radar axes: with a single cluster (or equal
    means) every normalized value is 0.5 by the degenerate-range rule.
    """
    variables = list(variables)
    k = reg.k
    out = {}
    frame_idx = reg.included if reg.included is not None else np.arange(reg.n)
    for v in variables:
        values = np.asarray(frame.variable(v), dtype=float)[frame_idx]
        means = np.array([np.nanmean(values[reg.labels == c]) for c in range(k)])
        out[v] = minmax_normalize(means)
    return out
