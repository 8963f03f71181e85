"""Model diagnostics: correlation screening, Moran's I, and the group scan.

Moran's I on residuals is the workhorse: a high value flags spatial
structure the model failed to absorb. The group scan fits OLS and the
spatial Durbin model per social group and ranks groups by the SDM residual
Moran's I (descending), surfacing the groups whose spatial heterogeneity the
global model captures worst.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .geodata import SpatialFrame, SubgroupDataset
from .groups import DEFAULT_MIN_POP, GroupKey, aggregate_rate, enumerate_groups
from .models import ModelSpec, fit_ols, fit_sdm
from .weights import WeightsMatrix

COLLINEARITY_FLAG = 0.7  # screening level; surfaced as a warning, never auto-exclusion
DEFAULT_COVERAGE = 0.5

__all__ = [
    "MoranResult",
    "CorrelationResult",
    "GroupScanRow",
    "GroupScan",
    "correlation_matrix",
    "morans_i",
    "morans_i_permutation",
    "scan_groups",
]


@dataclass
class MoranResult:
    i: float
    expected: float
    z: float
    p: float
    n_used: int

    def to_json(self) -> dict:
        return {
            "i": float(self.i),
            "expected": float(self.expected),
            "z": float(self.z),
            "p": float(self.p),
            "n_used": int(self.n_used),
        }


@dataclass
class CorrelationResult:
    variables: list[str]
    matrix: np.ndarray  # NaN where undefined
    flagged: list[tuple[str, str, float]]  # |r| >= 0.7
    undefined: list[str]  # constant variables

    def to_json(self) -> dict:
        cells = [[None if not np.isfinite(v) else float(v) for v in row] for row in self.matrix]
        return {
            "variables": self.variables,
            "matrix": cells,
            "flagged": [[a, b, float(r)] for a, b, r in self.flagged],
            "undefined": self.undefined,
        }


def correlation_matrix(frame: SpatialFrame, variables) -> CorrelationResult:
    """Pairwise Pearson correlations with multicollinearity flags.

    Each pair uses its complete observations; pairs involving a constant
    variable are undefined (NaN) and reported, not silently zeroed.
    """
    variables = list(variables)
    m = len(variables)
    data = [np.asarray(frame.variable(v), dtype=float) for v in variables]
    matrix = np.full((m, m), np.nan)
    undefined = set()
    flagged = []
    for a in range(m):
        matrix[a, a] = 1.0
        for b in range(a + 1, m):
            both = np.isfinite(data[a]) & np.isfinite(data[b])
            if both.sum() < 3:
                raise ValueError(
                    f"fewer than 3 complete observations for pair ({variables[a]}, {variables[b]})"
                )
            xa, xb = data[a][both], data[b][both]
            sa, sb = xa.std(), xb.std()
            if sa == 0 or sb == 0:
                if sa == 0:
                    undefined.add(variables[a])
                if sb == 0:
                    undefined.add(variables[b])
                continue
            r = float(np.corrcoef(xa, xb)[0, 1])
            matrix[a, b] = matrix[b, a] = r
            if abs(r) >= COLLINEARITY_FLAG:
                flagged.append((variables[a], variables[b], r))
    for v in undefined:
        j = variables.index(v)
        matrix[j, :] = np.nan
        matrix[:, j] = np.nan
        matrix[j, j] = 1.0
        warnings.warn(f"variable {v!r} is constant; correlations undefined", stacklevel=2)
    return CorrelationResult(variables=variables, matrix=matrix, flagged=flagged, undefined=sorted(undefined))


def _moran_statistic(z: np.ndarray, w: WeightsMatrix) -> tuple[float, float]:
    s0 = float(w.matrix.sum())
    num = float(z @ (w.matrix @ z))
    den = float(z @ z)
    n = len(z)
    return (n / s0) * (num / den), s0


def morans_i(x, w: WeightsMatrix) -> MoranResult:
    """Global Moran's I with a normal-approximation z-score.

    I = (n / S0) * (z' W z) / (z' z) with z the deviations from the mean.
    Only finite, non-island entries enter; n is the used count. Two-sided
    p-value under the normality assumption.
    """
    arr = np.asarray(x, dtype=float)
    if arr.shape[0] != w.n:
        raise ValueError(f"vector length {arr.shape[0]} != n={w.n}")
    keep = np.isfinite(arr)
    keep[list(w.islands)] = False
    used_idx = np.flatnonzero(keep)
    if len(used_idx) < 3:
        raise ValueError("Moran's I needs at least 3 usable (finite, non-island) units")
    sub = w.subset(used_idx) if len(used_idx) < w.n else w
    xv = arr[used_idx]
    if np.all(xv == xv[0]):
        raise ValueError("Moran's I is undefined for a constant vector")
    z = xv - xv.mean()
    n = len(xv)

    i_stat, s0 = _moran_statistic(z, sub)

    dense_sum = sub.matrix + sub.matrix.T
    s1 = 0.5 * float(dense_sum.multiply(dense_sum).sum())
    row_col = np.asarray(sub.matrix.sum(axis=1)).ravel() + np.asarray(sub.matrix.sum(axis=0)).ravel()
    s2 = float((row_col**2).sum())
    expected = -1.0 / (n - 1)
    var = (n * n * s1 - n * s2 + 3.0 * s0 * s0) / (s0 * s0 * (n * n - 1.0)) - expected**2
    zscore = (i_stat - expected) / math.sqrt(var) if var > 0 else 0.0
    p = 2.0 * float(norm.sf(abs(zscore)))
    return MoranResult(i=i_stat, expected=expected, z=zscore, p=p, n_used=n)


def morans_i_permutation(x, w: WeightsMatrix, permutations: int = 999, seed: int = 0) -> tuple[MoranResult, float]:
    """Moran's I plus a permutation p-value (opt-in for small n).

    Returns the analytic result and the pseudo p-value
    (1 + #{|I_perm - E| >= |I_obs - E|}) / (permutations + 1).
    """
    result = morans_i(x, w)
    arr = np.asarray(x, dtype=float)
    keep = np.isfinite(arr)
    keep[list(w.islands)] = False
    used_idx = np.flatnonzero(keep)
    sub = w.subset(used_idx) if len(used_idx) < w.n else w
    xv = arr[used_idx]
    rng = np.random.default_rng(seed)
    obs_dev = abs(result.i - result.expected)
    hits = 0
    for _ in range(permutations):
        perm = rng.permutation(xv)
        z = perm - perm.mean()
        i_perm, _ = _moran_statistic(z, sub)
        if abs(i_perm - result.expected) >= obs_dev:
            hits += 1
    return result, (1.0 + hits) / (permutations + 1.0)


@dataclass
class GroupScanRow:
    group: GroupKey
    coverage: float
    moran_ols: MoranResult | None
    moran_sdm: MoranResult | None
    r2_ols: float | None
    r2_sdm: float | None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "group": self.group.to_json(),
            "label": self.group.label(),
            "coverage": float(self.coverage),
            "moran_ols": self.moran_ols.to_json() if self.moran_ols else None,
            "moran_sdm": self.moran_sdm.to_json() if self.moran_sdm else None,
            "r2_ols": None if self.r2_ols is None else float(self.r2_ols),
            "r2_sdm": None if self.r2_sdm is None else float(self.r2_sdm),
            "error": self.error,
        }


@dataclass
class GroupScan:
    rows: list[GroupScanRow]
    excluded: list[tuple[GroupKey, float]]  # below the coverage threshold
    behavior: str
    attrs: list[str]

    def to_json(self) -> dict:
        return {
            "rows": [r.to_json() for r in self.rows],
            "excluded": [{"group": g.to_json(), "coverage": float(c)} for g, c in self.excluded],
            "behavior": self.behavior,
            "attrs": self.attrs,
        }


def scan_groups(
    spec: ModelSpec,
    frame: SpatialFrame,
    sd: SubgroupDataset,
    attrs,
    w: WeightsMatrix,
    min_pop: int = DEFAULT_MIN_POP,
    coverage_threshold: float = DEFAULT_COVERAGE,
) -> GroupScan:
    """Fit OLS and SDM per enumerated group; rank by SDM residual Moran's I.

    Groups below the coverage threshold are excluded (reported). Per-group
    fit failures are recorded in the row and the scan continues. Rows sort
    by moran_sdm.i descending; ties and failed rows sink to the bottom in
    enumeration order.
    """
    keys = enumerate_groups(attrs, sd)
    rows: list[GroupScanRow] = []
    excluded: list[tuple[GroupKey, float]] = []
    for order, key in enumerate(keys):
        series = aggregate_rate(sd, key, spec.dependent, min_pop=min_pop, unit_ids=frame.unit_ids)
        if series.coverage < coverage_threshold:
            excluded.append((key, series.coverage))
            continue
        try:
            ols = fit_ols(spec, frame, series)
            sdm = fit_sdm(spec, frame, series, w)
            row = GroupScanRow(
                group=key,
                coverage=series.coverage,
                moran_ols=morans_i(ols.residuals, w),
                moran_sdm=morans_i(sdm.residuals, w),
                r2_ols=ols.r2,
                r2_sdm=sdm.r2,
            )
        except (ValueError, KeyError) as exc:
            row = GroupScanRow(
                group=key,
                coverage=series.coverage,
                moran_ols=None,
                moran_sdm=None,
                r2_ols=None,
                r2_sdm=None,
                error=str(exc),
            )
        rows.append(row)

    order_index = {id(r): k for k, r in enumerate(rows)}
    rows.sort(key=lambda r: (-(r.moran_sdm.i if r.moran_sdm else -np.inf), order_index[id(r)]))
    return GroupScan(rows=rows, excluded=excluded, behavior=spec.dependent, attrs=list(attrs))
