"""Pure-numpy implementation of the local weighted-least-squares sweep.

Same contract as the compiled kernel in ``_gwrloop.pyx``: one Cholesky solve
per focal unit, NaN rows where the local system is singular or the adaptive
bandwidth degenerates to zero.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

KERNEL_BISQUARE = 0
KERNEL_UNIFORM = 1


def local_wls_sweep(
    design: np.ndarray,
    y: np.ndarray,
    dist: np.ndarray,
    bw_dist: np.ndarray,
    kernel_code: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fit one weighted least-squares system per focal unit.

    design   : (n, p) augmented design matrix
    y        : (n,) response
    dist     : (n, n) pairwise centroid distances
    bw_dist  : (n,) per-unit kernel bandwidth distance (adaptive)
    kernel_code : 0 bisquare (support d < b), 1 uniform (support d <= b)

    Returns (betas (n, p), hat_diag (n,), ok (n,) bool). Focal units whose
    local normal matrix is not SPD get NaN coefficients and ok=False.
    """
    n, p = design.shape
    betas = np.full((n, p), np.nan)
    hat_diag = np.full(n, np.nan)
    ok = np.zeros(n, dtype=bool)

    for i in range(n):
        b = bw_dist[i]
        if not np.isfinite(b) or b <= 0.0:
            continue
        d = dist[i]
        if kernel_code == KERNEL_UNIFORM:
            w = (d <= b).astype(float)
        else:
            u = d / b
            w = np.where(u < 1.0, (1.0 - u * u) ** 2, 0.0)
        xw = design * w[:, None]
        a = design.T @ xw
        rhs = np.column_stack([xw.T @ y, design[i]])
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            continue
        sol = _cho_solve(chol, rhs)
        betas[i] = sol[:, 0]
        # Self weight is 1 for both kernels at d=0, so s_ii = x_i' A^{-1} x_i.
        hat_diag[i] = float(design[i] @ sol[:, 1])
        ok[i] = True
    return betas, hat_diag, ok


def _cho_solve(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    z = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.T, z)
