#!/usr/bin/env python3
"""Benchmark the compiled local-regression kernel against the numpy fallback.

The local weighted-least-squares sweep is the pipeline's hot loop: bandwidth
selection re-runs it at every candidate bandwidth. Usage:

    python benchmarks/bench_gwr.py [--n 1000] [--vars 5] [--repeats 3]
"""

import argparse
import time

import numpy as np

from spatialkit.kernels import fallback

try:
    from spatialkit.kernels import _gwrloop as compiled
except ImportError:
    compiled = None


def make_problem(n, n_vars, seed=0):
    rng = np.random.default_rng(seed)
    p = 2 * n_vars + 2  # intercept + X + Wy + WX
    design = rng.normal(size=(n, p))
    design[:, 0] = 1.0
    y = rng.normal(size=n)
    coords = rng.uniform(0, 100, size=(n, 2))
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    dist_sorted = np.sort(dist, axis=1)
    return design, y, dist, dist_sorted


def bench(module, design, y, dist, bw_dist, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        betas, hat, ok = module.local_wls_sweep(design, y, dist, bw_dist, 0)
        best = min(best, time.perf_counter() - start)
    assert ok.all()
    return best, betas


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--vars", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    design, y, dist, dist_sorted = make_problem(args.n, args.vars)
    n, p = design.shape
    print(f"n={n} units, p={p} local parameters, best of {args.repeats} runs")
    print(f"{'bandwidth':>10} {'python':>12} {'cython':>12} {'speedup':>9}")

    for frac in (0.05, 0.15, 0.5, 1.0):
        bw = max(p + 5, int(frac * n))
        bw_dist = np.ascontiguousarray(dist_sorted[:, bw - 1])
        t_py, b_py = bench(fallback, design, y, dist, bw_dist, args.repeats)
        if compiled is None:
            print(f"{bw:>10} {t_py * 1e3:>10.1f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_cy, b_cy = bench(compiled, design, y, dist, bw_dist, args.repeats)
        np.testing.assert_allclose(b_cy, b_py, rtol=1e-9, atol=1e-12)
        print(f"{bw:>10} {t_py * 1e3:>10.1f}ms {t_cy * 1e3:>10.1f}ms {t_py / t_cy:>8.1f}x")

    if compiled is None:
        print("\ncompiled kernel not built; install with a C toolchain to compare")


if __name__ == "__main__":
    main()
