"""Global and local regression estimators.

Three estimators share one design-matrix convention:

* ``fit_ols``     -- least squares of y on [1, X].
* ``fit_sdm``     -- adds spatial lags of the dependent (rho * Wy) and the
  independents (WX gamma); estimated by concentrated maximum likelihood with
  the log-determinant term evaluated through precomputed eigenvalues of W.
* ``fit_gwr_sdm`` -- the local variant: one weighted least-squares fit per
  unit on the augmented design [1, X, Wy, WX], weighted by an adaptive
  geographic kernel, yielding per-unit coefficient surfaces.

Units with a missing dependent value are dropped listwise; all returned
vectors are padded back to frame length with NaN so indices stay aligned.

The local spatial-lag model has no canonical estimator; treating Wy as one
more regressor in the geographically weighted fit is a documented
approximation (the downstream consumers need only reproducible coefficient
surfaces). The geographic kernel is deliberately distinct from the spatial
weights W used for the lag terms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .geodata import SpatialFrame
from .kernels import KERNEL_BISQUARE, KERNEL_UNIFORM, local_wls_sweep
from .weights import WeightsMatrix, spatial_lag

RHO_BOUNDS = (-0.999, 0.999)
RANK_RTOL = 1e-10  # smallest/largest singular value below this => rank-deficient
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

__all__ = [
    "ModelSpec",
    "GlobalFit",
    "LocalFit",
    "CollinearityError",
    "fit_ols",
    "fit_sdm",
    "select_bandwidth",
    "fit_gwr_sdm",
]


class CollinearityError(ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; collinear column(s): {', '.join(self.columns)}")


@dataclass(frozen=True)
class ModelSpec:
    """Which variables enter the model, and which lag terms are included."""

    dependent: str
    independents: tuple[str, ...]
    include_wy: bool = True
    include_wx: bool = True
    wx_exclude: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.independents:
            raise ValueError("independents must be nonempty")
        if len(set(self.independents)) != len(self.independents):
            raise ValueError("independents contain duplicates")
        if self.dependent in self.independents:
            raise ValueError("dependent variable cannot appear among independents")
        object.__setattr__(self, "independents", tuple(self.independents))
        object.__setattr__(self, "wx_exclude", tuple(self.wx_exclude))

    @property
    def wx_variables(self) -> tuple[str, ...]:
        if not self.include_wx:
            return ()
        return tuple(v for v in self.independents if v not in self.wx_exclude)

    def to_json(self) -> dict:
        return {
            "dependent": self.dependent,
            "independents": list(self.independents),
            "include_wy": self.include_wy,
            "include_wx": self.include_wx,
            "wx_exclude": list(self.wx_exclude),
        }


@dataclass
class GlobalFit:
    model_kind: str  # ols | sdm
    coef_names: list[str]
    beta: np.ndarray  # intercept + independents
    rho: float | None
    gamma: np.ndarray | None
    gamma_names: list[str]
    residuals: np.ndarray  # frame length, NaN at unused units
    fitted: np.ndarray
    r2: float
    loglik: float | None
    n_used: int
    used: np.ndarray  # bool mask, frame length

    def coefficients(self) -> dict[str, float]:
        out = dict(zip(self.coef_names, self.beta))
        if self.rho is not None:
            out["rho"] = self.rho
        if self.gamma is not None:
            out.update({f"gamma:{n}": v for n, v in zip(self.gamma_names, self.gamma)})
        return out

    def to_json(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "coefficients": {k: float(v) for k, v in self.coefficients().items()},
            "diagnostics": {
                "r2": float(self.r2),
                "loglik": None if self.loglik is None else float(self.loglik),
                "n_used": int(self.n_used),
            },
        }


@dataclass
class LocalFit:
    """Per-unit coefficients from the geographically weighted fit.

    Arrays are frame length and NaN where a unit was excluded (missing
    dependent) or its local system was rank deficient.
    """

    coef_names: list[str]  # column order of the augmented design
    coefficients: np.ndarray  # (n, p) padded
    bandwidth: int
    kernel: str
    local_r2: np.ndarray
    coords: np.ndarray  # (n, 2) planar centroids
    used: np.ndarray
    ok: np.ndarray  # fitted successfully (subset of used)
    rss: float
    trace_hat: float
    aicc: float
    x_names: list[str] = field(default_factory=list)
    wx_names: list[str] = field(default_factory=list)
    has_wy: bool = False

    @property
    def n(self) -> int:
        return self.coefficients.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.coefficients[:, self.coef_names.index(name)]

    def beta_columns(self) -> dict[str, np.ndarray]:
        return {n: self.column(n) for n in self.coef_names if n.startswith("beta:")}

    def rho_column(self) -> np.ndarray | None:
        return self.column("rho") if self.has_wy else None

    def gamma_columns(self) -> dict[str, np.ndarray]:
        return {v: self.column(f"gamma:{v}") for v in self.wx_names}

    def surfaces(self) -> dict[str, np.ndarray]:
        return {name: self.coefficients[:, j] for j, name in enumerate(self.coef_names)}

    def to_json(self) -> dict:
        def clean(arr):
            return [None if not np.isfinite(v) else float(v) for v in arr]

        return {
            "coef_names": self.coef_names,
            "coefficients": {name: clean(self.column(name)) for name in self.coef_names},
            "local_r2": clean(self.local_r2),
            "bandwidth": int(self.bandwidth),
            "kernel": self.kernel,
            "diagnostics": {
                "rss": float(self.rss),
                "trace_hat": float(self.trace_hat),
                "aicc": float(self.aicc),
                "n_used": int(self.used.sum()),
                "n_failed": int(self.used.sum() - self.ok.sum()),
            },
        }


# ---------------------------------------------------------------------------
# shared plumbing


def _resolve_y(y, n: int) -> np.ndarray:
    rate = getattr(y, "rate", None)
    arr = np.asarray(rate if rate is not None else y, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"dependent vector has shape {arr.shape}, expected ({n},)")
    return arr


def _design_matrix(spec: ModelSpec, frame: SpatialFrame, used: np.ndarray):
    cols = [np.ones(int(used.sum()))]
    names = ["beta:intercept"]
    for v in spec.independents:
        cols.append(frame.variable(v)[used])
        names.append(f"beta:{v}")
    return np.column_stack(cols), names


def _check_rank(design: np.ndarray, names: list[str]) -> None:
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] >= RANK_RTOL * sv[0]:
        return
    # Pivoted QR points at the dependent columns.
    _, r, piv = scipy.linalg.qr(design, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    bad = [names[piv[i]] for i in range(len(diag)) if diag[i] < RANK_RTOL * diag[0]]
    raise CollinearityError(bad or names)


def _gaussian_loglik(rss: float, n: int) -> float:
    return -0.5 * n * (math.log(2.0 * math.pi) + 1.0 + math.log(rss / n))


def _pad(values: np.ndarray, used: np.ndarray) -> np.ndarray:
    out = np.full(used.shape[0], np.nan)
    out[used] = values
    return out


# ---------------------------------------------------------------------------
# global fits


def fit_ols(spec: ModelSpec, frame: SpatialFrame, y) -> GlobalFit:
    """Ordinary least squares baseline on [1, X]."""
    yfull = _resolve_y(y, frame.n)
    used = np.isfinite(yfull)
    for v in spec.independents:
        used &= np.isfinite(frame.variable(v))
    design, names = _design_matrix(spec, frame, used)
    n_used, p = design.shape
    if n_used < p + 2:
        raise ValueError(f"too few units for OLS: {n_used} usable, need at least {p + 2}")
    _check_rank(design, names)

    yv = yfull[used]
    beta, *_ = np.linalg.lstsq(design, yv, rcond=None)
    fitted = design @ beta
    resid = yv - fitted
    rss = float(resid @ resid)
    tss = float(((yv - yv.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    return GlobalFit(
        model_kind="ols",
        coef_names=names,
        beta=beta,
        rho=None,
        gamma=None,
        gamma_names=[],
        residuals=_pad(resid, used),
        fitted=_pad(fitted, used),
        r2=r2,
        loglik=_gaussian_loglik(rss, n_used) if rss > 0 else None,
        n_used=n_used,
        used=used,
    )


def fit_sdm(spec: ModelSpec, frame: SpatialFrame, y, w: WeightsMatrix, rho_tol: float = 1e-6) -> GlobalFit:
    """Spatial Durbin model by concentrated maximum likelihood.

    The response and the augmented design [1, X, WX] are regressed once each
    against Wy, reducing the concentrated log-likelihood to a cheap scalar
    function of rho; rho is located by golden-section search on (-0.999,
    0.999) and polished by root-finding the analytic score, so the gradient
    at the reported optimum is at machine-level zero. The log-determinant
    ln|I - rho W| is evaluated from dense eigenvalues of W.
    """
    if not w.row_standardized:
        raise ValueError("fit_sdm requires a row-standardized weights matrix")
    yfull = _resolve_y(y, frame.n)
    used = np.isfinite(yfull)
    for v in spec.independents:
        used &= np.isfinite(frame.variable(v))
    used_idx = np.flatnonzero(used)
    sub_w = w.subset(used_idx)

    design, names = _design_matrix(spec, frame, used)
    yv = yfull[used]
    gamma_names = list(spec.wx_variables)
    for v in gamma_names:
        design = np.column_stack([design, spatial_lag(sub_w, frame.variable(v)[used])])
        names.append(f"gamma:{v}")
    n_used, p = design.shape
    if n_used < p + 2:
        raise ValueError(f"too few units for SDM: {n_used} usable, need at least {p + 2}")
    _check_rank(design, names)

    if not spec.include_wy:
        return _fit_slx(design, names, yv, used, gamma_names)

    wy = spatial_lag(sub_w, yv)
    b0, *_ = np.linalg.lstsq(design, yv, rcond=None)
    b1, *_ = np.linalg.lstsq(design, wy, rcond=None)
    e0 = yv - design @ b0
    e1 = wy - design @ b1
    a_ = float(e0 @ e0)
    b_ = float(e0 @ e1)
    c_ = float(e1 @ e1)

    evals = sub_w.eigenvalues()

    def logdet(rho: float) -> float:
        return float(np.log(np.abs(1.0 - rho * evals)).sum())

    def neg_concentrated(rho: float) -> float:
        rss = a_ - 2.0 * b_ * rho + c_ * rho * rho
        if rss <= 0:
            return np.inf
        return 0.5 * n_used * math.log(rss / n_used) - logdet(rho)

    def score(rho: float) -> float:
        # d/drho of the concentrated log-likelihood.
        rss = a_ - 2.0 * b_ * rho + c_ * rho * rho
        dlog = float(np.real((-evals / (1.0 - rho * evals)).sum()))
        return -0.5 * n_used * (-2.0 * b_ + 2.0 * c_ * rho) / rss + dlog

    lo, hi = _golden_bracket(neg_concentrated, *RHO_BOUNDS, tol=rho_tol)
    rho_hat = 0.5 * (lo + hi)
    s_lo, s_hi = score(lo), score(hi)
    if np.isfinite(s_lo) and np.isfinite(s_hi) and s_lo * s_hi < 0:
        rho_hat = float(brentq(score, lo, hi, xtol=1e-13))

    value = neg_concentrated(rho_hat)
    if not np.isfinite(value):
        raise ValueError("non-finite SDM likelihood at the optimum")

    coef = b0 - rho_hat * b1
    resid = e0 - rho_hat * e1
    rss = float(resid @ resid)
    fitted = yv - resid
    tss = float(((yv - yv.mean()) ** 2).sum())
    loglik = -0.5 * n_used * (math.log(2.0 * math.pi) + 1.0) - 0.5 * n_used * math.log(rss / n_used) + logdet(rho_hat)

    n_beta = 1 + len(spec.independents)
    return GlobalFit(
        model_kind="sdm",
        coef_names=names[:n_beta],
        beta=coef[:n_beta],
        rho=rho_hat,
        gamma=coef[n_beta:],
        gamma_names=gamma_names,
        residuals=_pad(resid, used),
        fitted=_pad(fitted, used),
        r2=1.0 - rss / tss if tss > 0 else 0.0,
        loglik=loglik,
        n_used=n_used,
        used=used,
    )


def _fit_slx(design, names, yv, used, gamma_names):
    # Durbin terms without the dependent lag: plain least squares on [1, X, WX].
    n_used = design.shape[0]
    coef, *_ = np.linalg.lstsq(design, yv, rcond=None)
    fitted = design @ coef
    resid = yv - fitted
    rss = float(resid @ resid)
    tss = float(((yv - yv.mean()) ** 2).sum())
    n_beta = len(names) - len(gamma_names)
    return GlobalFit(
        model_kind="sdm",
        coef_names=names[:n_beta],
        beta=coef[:n_beta],
        rho=None,
        gamma=coef[n_beta:],
        gamma_names=gamma_names,
        residuals=_pad(resid, used),
        fitted=_pad(fitted, used),
        r2=1.0 - rss / tss if tss > 0 else 0.0,
        loglik=_gaussian_loglik(rss, n_used) if rss > 0 else None,
        n_used=n_used,
        used=used,
    )


def _golden_bracket(f, a: float, b: float, tol: float) -> tuple[float, float]:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return a, b


# ---------------------------------------------------------------------------
# local fits


def _local_design(spec: ModelSpec, frame: SpatialFrame, y, w: WeightsMatrix):
    yfull = _resolve_y(y, frame.n)
    used = np.isfinite(yfull)
    for v in spec.independents:
        used &= np.isfinite(frame.variable(v))
    used_idx = np.flatnonzero(used)
    sub_w = w.subset(used_idx)
    yv = yfull[used]

    design, names = _design_matrix(spec, frame, used)
    x_names = list(spec.independents)
    has_wy = spec.include_wy
    if has_wy:
        design = np.column_stack([design, spatial_lag(sub_w, yv)])
        names.append("rho")
    wx_names = list(spec.wx_variables)
    for v in wx_names:
        design = np.column_stack([design, spatial_lag(sub_w, frame.variable(v)[used])])
        names.append(f"gamma:{v}")

    coords = frame.centroids[used]
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    return used, yv, design, names, x_names, wx_names, has_wy, coords, dist


def _aicc(rss: float, trace_hat: float, n: int) -> float:
    if rss <= 0:
        return -np.inf
    denom = n - 2.0 - trace_hat
    if denom <= 0:
        return np.inf
    return n * math.log(rss / n) + n * math.log(2.0 * math.pi) + n * (n + trace_hat) / denom


def _sweep(design, yv, dist, dist_sorted, bandwidth: int, kernel: str):
    kernel_code = {"bisquare": KERNEL_BISQUARE, "uniform": KERNEL_UNIFORM}[kernel]
    bw_dist = dist_sorted[:, bandwidth - 1]  # self counts as the first neighbor
    return local_wls_sweep(
        np.ascontiguousarray(design),
        np.ascontiguousarray(yv),
        np.ascontiguousarray(dist),
        np.ascontiguousarray(bw_dist),
        kernel_code,
    )


def select_bandwidth(
    spec: ModelSpec,
    frame: SpatialFrame,
    y,
    w: WeightsMatrix,
    criterion: str = "aicc",
    kernel: str = "bisquare",
) -> int:
    """Adaptive bandwidth (neighbor count) minimizing the corrected AIC.

    Golden-section search over the integer range [p + 5, n] with memoized
    evaluations; effective parameters enter through the trace of the hat
    matrix. Degenerate search ranges collapse to the single feasible value.
    """
    if criterion != "aicc":
        raise ValueError(f"unsupported bandwidth criterion: {criterion!r}")
    used, yv, design, names, *_rest, dist = _local_design(spec, frame, y, w)
    n, p = design.shape
    lo, hi = p + 5, n
    if lo > hi:
        raise ValueError(f"too few units ({n}) for {p} local parameters; reduce the number of variables")
    if lo == hi:
        return lo
    dist_sorted = np.sort(dist, axis=1)

    cache: dict[int, float] = {}

    def objective(bw: int) -> float:
        if bw in cache:
            return cache[bw]
        betas, hat, ok = _sweep(design, yv, dist, dist_sorted, bw, kernel)
        if not ok.all():
            cache[bw] = np.inf
            return np.inf
        fitted = np.einsum("ij,ij->i", design, betas)
        rss = float(((yv - fitted) ** 2).sum())
        cache[bw] = _aicc(rss, float(hat.sum()), n)
        return cache[bw]

    a, b = lo, hi
    while b - a > 2:
        span = b - a
        c = max(a + 1, min(b - 1, int(round(b - GOLDEN * span))))
        d = max(a + 1, min(b - 1, int(round(a + GOLDEN * span))))
        if c >= d:
            break
        if objective(c) < objective(d):
            b = d
        else:
            a = c
    for bw in range(a, b + 1):
        objective(bw)
    finite = {bw: v for bw, v in cache.items() if np.isfinite(v)}
    if not finite:
        raise ValueError("no bandwidth yields a finite AICc; reduce the number of variables")
    return min(finite, key=lambda bw: (finite[bw], bw))


def fit_gwr_sdm(
    spec: ModelSpec,
    frame: SpatialFrame,
    y,
    w: WeightsMatrix,
    bandwidth: int,
    kernel: str = "bisquare",
) -> LocalFit:
    """Geographically weighted fit of the augmented design [1, X, Wy, WX].

    Each unit gets its own coefficient vector from a weighted least-squares
    fit with adaptive kernel weights computed from centroid distances (the
    bandwidth is a neighbor count). Local fits are mutually independent, so
    results do not depend on evaluation order. Rank-deficient local systems
    are flagged missing with a warning and the fit continues.
    """
    used, yv, design, names, x_names, wx_names, has_wy, coords, dist = _local_design(spec, frame, y, w)
    n, p = design.shape
    if bandwidth < p + 2:
        raise ValueError(f"bandwidth {bandwidth} below minimum {p + 2} (local parameters + 2)")
    if bandwidth > n:
        raise ValueError(f"bandwidth {bandwidth} exceeds usable unit count {n}")
    dist_sorted = np.sort(dist, axis=1)
    betas, hat, ok = _sweep(design, yv, dist, dist_sorted, bandwidth, kernel)
    if not ok.all():
        warnings.warn(
            f"{int((~ok).sum())} unit(s) had rank-deficient local systems; their coefficients are missing",
            stacklevel=2,
        )

    fitted = np.einsum("ij,ij->i", design, betas)
    resid_sq = (yv - fitted) ** 2
    rss = float(resid_sq[ok].sum())
    trace_hat = float(hat[ok].sum())

    local_r2 = _local_r2(design, yv, dist, dist_sorted[:, bandwidth - 1], betas, ok, kernel)

    n_full = frame.n
    coef_full = np.full((n_full, p), np.nan)
    coef_full[used] = betas
    r2_full = _pad(local_r2, used)
    ok_full = np.zeros(n_full, dtype=bool)
    ok_full[used] = ok

    return LocalFit(
        coef_names=names,
        coefficients=coef_full,
        bandwidth=int(bandwidth),
        kernel=kernel,
        local_r2=r2_full,
        coords=frame.centroids,
        used=used,
        ok=ok_full,
        rss=rss,
        trace_hat=trace_hat,
        aicc=_aicc(rss, trace_hat, n),
        x_names=x_names,
        wx_names=wx_names,
        has_wy=has_wy,
    )


def _local_r2(design, yv, dist, bw_dist, betas, ok, kernel):
    n = design.shape[0]
    out = np.full(n, np.nan)
    for i in range(n):
        if not ok[i]:
            continue
        b = bw_dist[i]
        if kernel == "uniform":
            wts = (dist[i] <= b).astype(float)
        else:
            u = dist[i] / b
            wts = np.where(u < 1.0, (1.0 - u * u) ** 2, 0.0)
        pred = design @ betas[i]
        wsum = wts.sum()
        ybar = float((wts * yv).sum() / wsum)
        tss = float((wts * (yv - ybar) ** 2).sum())
        rssw = float((wts * (yv - pred) ** 2).sum())
        out[i] = 1.0 - rssw / tss if tss > 0 else np.nan
    return out
