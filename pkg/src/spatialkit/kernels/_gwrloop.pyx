# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled local weighted-least-squares sweep.

One Cholesky factorization per focal unit via LAPACK dposv, skipping
zero-weight observations (the bisquare kernel has compact support, so small
bandwidths touch only a fraction of the rows).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, NAN
from scipy.linalg.cython_lapack cimport dposv

BACKEND = "cython"

KERNEL_BISQUARE = 0
KERNEL_UNIFORM = 1


def local_wls_sweep(
    double[:, ::1] design,
    double[::1] y,
    double[:, ::1] dist,
    double[::1] bw_dist,
    int kernel_code,
):
    cdef Py_ssize_t n = design.shape[0]
    cdef Py_ssize_t p = design.shape[1]

    betas_arr = np.full((n, p), np.nan)
    hat_arr = np.full(n, np.nan)
    ok_arr = np.zeros(n, dtype=np.uint8)
    cdef double[:, ::1] betas = betas_arr
    cdef double[::1] hat_diag = hat_arr
    cdef unsigned char[::1] ok = ok_arr

    # Workspaces: A is column-major for LAPACK; symmetric, so layout is moot.
    a_arr = np.zeros((p, p), order="F")
    rhs_arr = np.zeros((p, 2), order="F")
    w_arr = np.zeros(n)
    cdef double[::1, :] a = a_arr
    cdef double[::1, :] rhs = rhs_arr
    cdef double[::1] w = w_arr

    cdef Py_ssize_t i, j, r, c
    cdef double b, u, wj, dj
    cdef int info, pi = <int> p, nrhs = 2
    cdef char uplo = b'L'

    for i in range(n):
        b = bw_dist[i]
        if not isfinite(b) or b <= 0.0:
            continue

        for j in range(n):
            dj = dist[i, j]
            if kernel_code == KERNEL_UNIFORM:
                w[j] = 1.0 if dj <= b else 0.0
            else:
                u = dj / b
                w[j] = (1.0 - u * u) * (1.0 - u * u) if u < 1.0 else 0.0

        for r in range(p):
            for c in range(r, p):
                a[r, c] = 0.0
            rhs[r, 0] = 0.0
            rhs[r, 1] = design[i, r]

        for j in range(n):
            wj = w[j]
            if wj == 0.0:
                continue
            for r in range(p):
                u = wj * design[j, r]
                for c in range(r, p):
                    a[r, c] += u * design[j, c]
                rhs[r, 0] += u * y[j]
        for r in range(p):
            for c in range(r + 1, p):
                a[c, r] = a[r, c]

        dposv(&uplo, &pi, &nrhs, &a[0, 0], &pi, &rhs[0, 0], &pi, &info)
        if info != 0:
            continue

        for r in range(p):
            betas[i, r] = rhs[r, 0]
        u = 0.0
        for r in range(p):
            u += design[i, r] * rhs[r, 1]
        hat_diag[i] = u
        ok[i] = 1

    return betas_arr, hat_arr, ok_arr.astype(bool)
