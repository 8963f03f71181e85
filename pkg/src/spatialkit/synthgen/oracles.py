"""Independent brute-force oracles.

Each oracle re-derives a quantity by the most literal method available
(normal equations, exhaustive enumeration, elementwise recomputation) using
plain dense numpy, deliberately sharing no code with the production path it
checks.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

__all__ = [
    "ols_normal_equations",
    "moran_direct",
    "moran_permutation",
    "wcss",
    "best_contiguous_bipartition",
    "spillover_bruteforce",
    "knn_bruteforce",
    "adjacency_bruteforce",
]

BIPARTITION_CAP = 12  # contiguous-partition count explodes past desk scale


def ols_normal_equations(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    """beta = (X'X)^-1 X'y, solved directly."""
    xtx = design.T @ design
    return np.linalg.solve(xtx, design.T @ y)


def moran_direct(x: np.ndarray, w_dense: np.ndarray) -> float:
    """Moran's I from the textbook formula on a dense weight matrix."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w_dense, dtype=float)
    n = len(x)
    z = x - x.mean()
    s0 = w.sum()
    num = 0.0
    for i in range(n):
        for j in range(n):
            num += w[i, j] * z[i] * z[j]
    return (n / s0) * num / float(z @ z)


def moran_permutation(
    x: np.ndarray, w_dense: np.ndarray, permutations: int = 999, seed: int = 0
) -> tuple[float, np.ndarray, float]:
    """Observed I, permutation replicates, and a two-sided pseudo p-value."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w_dense, dtype=float)
    n = len(x)
    s0 = w.sum()

    def stat(v: np.ndarray) -> float:
        z = v - v.mean()
        return (n / s0) * float(z @ w @ z) / float(z @ z)

    observed = stat(x)
    rng = np.random.default_rng(seed)
    reps = np.array([stat(rng.permutation(x)) for _ in range(permutations)])
    expected = -1.0 / (n - 1)
    hits = int((np.abs(reps - expected) >= abs(observed - expected)).sum())
    return observed, reps, (1.0 + hits) / (permutations + 1.0)


def wcss(features: np.ndarray, labels) -> float:
    """Total within-cluster sum of squared deviations from cluster means."""
    feats = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    total = 0.0
    for c in np.unique(labels):
        members = feats[labels == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def _connected(mask_members: list[int], adjacency: dict[int, set[int]]) -> bool:
    if not mask_members:
        return False
    members = set(mask_members)
    seen = {mask_members[0]}
    stack = [mask_members[0]]
    while stack:
        node = stack.pop()
        for nb in adjacency[node]:
            if nb in members and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen == members


def best_contiguous_bipartition(
    features: np.ndarray, adjacency: dict[int, set[int]]
) -> tuple[np.ndarray, float]:
    """Exhaustively minimize WCSS over all contiguous 2-partitions (n <= 12)."""
    feats = np.asarray(features, dtype=float)
    n = feats.shape[0]
    if n > BIPARTITION_CAP:
        raise ValueError(f"exhaustive bipartition capped at n={BIPARTITION_CAP}, got {n}")
    best_labels, best_score = None, math.inf
    for bits in range(1, 2**n - 1):
        side = [i for i in range(n) if bits & (1 << i)]
        rest = [i for i in range(n) if not bits & (1 << i)]
        if 0 in rest:  # canonical orientation halves the search
            continue
        if not (_connected(side, adjacency) and _connected(rest, adjacency)):
            continue
        labels = np.zeros(n, dtype=int)
        labels[rest] = 1
        score = wcss(feats, labels)
        if score < best_score - 1e-12:
            best_score = score
            best_labels = labels
    if best_labels is None:
        raise ValueError("graph admits no contiguous bipartition")
    return best_labels, best_score


def spillover_bruteforce(
    channel_coefs: dict[str, np.ndarray], w_dense: np.ndarray, centroids: np.ndarray
) -> dict[str, np.ndarray]:
    """Elementwise recomputation of the 16-sector spillover field."""
    n = w_dense.shape[0]
    fields = {name: np.zeros((n, 16)) for name in channel_coefs}
    for i in range(n):
        for j in range(n):
            if w_dense[i, j] == 0.0 or i == j:
                continue
            dx = centroids[j, 0] - centroids[i, 0]
            dy = centroids[j, 1] - centroids[i, 1]
            if dx == 0.0 and dy == 0.0:
                sector = 0
            else:
                bearing = math.degrees(math.atan2(dx, dy)) % 360.0
                sector = int(((bearing + 11.25) % 360.0) // 22.5)
            for name, coef in channel_coefs.items():
                fields[name][i, sector] += abs(coef[j] * w_dense[i, j])
    return fields


def knn_bruteforce(centroids: np.ndarray, k: int) -> list[set[int]]:
    """k nearest neighbors per point, ties broken by index order."""
    n = len(centroids)
    out = []
    for i in range(n):
        dists = sorted(
            (math.dist(centroids[i], centroids[j]), j) for j in range(n) if j != i
        )
        out.append({j for _, j in dists[:k]})
    return out


def adjacency_bruteforce(md, rule: str = "rook") -> dict[int, set[int]]:
    """Geometric adjacency for axis-aligned cells via bounding-box contact.

    rook: boxes touch along a segment of positive length; queen: any
    contact, corners included. Valid for lattice fixtures only.
    """
    boxes = []
    for unit in md.units:
        ring = unit.geometry["coordinates"][0]
        xs = [pt[0] for pt in ring]
        ys = [pt[1] for pt in ring]
        boxes.append((min(xs), min(ys), max(xs), max(ys)))

    def overlap_len(lo1, hi1, lo2, hi2) -> float:
        return min(hi1, hi2) - max(lo1, lo2)

    eps = 1e-9
    out: dict[int, set[int]] = {i: set() for i in range(len(boxes))}
    for i, j in combinations(range(len(boxes)), 2):
        ax0, ay0, ax1, ay1 = boxes[i]
        bx0, by0, bx1, by1 = boxes[j]
        dx = overlap_len(ax0, ax1, bx0, bx1)
        dy = overlap_len(ay0, ay1, by0, by1)
        touching_x = abs(dx) < eps
        touching_y = abs(dy) < eps
        if rule == "rook":
            adjacent = (touching_x and dy > eps) or (touching_y and dx > eps)
        else:
            adjacent = (touching_x or touching_y) and dx > -eps and dy > -eps
        if adjacent:
            out[i].add(j)
            out[j].add(i)
    return out
