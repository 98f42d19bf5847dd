#!/usr/bin/env python
"""Timing comparison of the compiled and pure-numpy kernel backends.

Imports both backend modules directly (ignoring the package-level
selection) and times each hot kernel plus a composite reverse-chain
step. Run after installing the package:

    python benchmarks/bench_kernels.py [--n 64] [--repeat 200]
"""

import argparse
import time

import numpy as np

from se3diff.kernels import numpy_backend

try:
    from se3diff.kernels import numba_backend
except ImportError:
    numba_backend = None


def make_inputs(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, 3))
    dists = numpy_backend.pairwise_distances(pts)
    alpha = rng.standard_normal((n, n))
    alpha = 0.5 * (alpha + alpha.T)
    np.fill_diagonal(alpha, 0.0)
    target = dists + 0.01 * np.abs(alpha)
    adjacency = dists < np.median(dists)
    np.fill_diagonal(adjacency, False)
    adjacency &= adjacency.T
    degrees = np.maximum(adjacency.sum(axis=1).astype(np.float64), 1.0)
    noise = rng.standard_normal((4096, 3))
    diff = np.array([1.0, 0.5, -0.25])
    sym = alpha @ alpha.T
    return {
        "pairwise_distances": (pts,),
        "weighted_product": (alpha, pts, dists, 1e-8),
        "sparse_scatter": (alpha, pts, dists, adjacency, degrees, 1e-8),
        "mds_objective": (pts, target),
        "smoothed_objective": (pts, target, 1e-8),
        "smoothed_gradient": (pts, target, 1e-8),
        "distance_increments": (diff, noise),
        "jacobi_eigh": (sym,),
    }


def bench(fn, args, repeat: int) -> float:
    fn(*args)  # warmup (and jit compile on the numba side)
    start = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - start) / repeat


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64, help="point count")
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    inputs = make_inputs(args.n)
    print(f"n={args.n}, repeat={args.repeat}")
    header = f"{'kernel':<22}{'numpy (us)':>12}{'numba (us)':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call_args in inputs.items():
        t_np = bench(getattr(numpy_backend, name), call_args, args.repeat)
        if numba_backend is None:
            print(f"{name:<22}{t_np * 1e6:>12.1f}{'n/a':>12}{'':>9}")
            continue
        t_nb = bench(getattr(numba_backend, name), call_args, args.repeat)
        print(f"{name:<22}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}"
              f"{t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
