#!/usr/bin/env python3
"""Benchmark the simulation kernels: numba-jitted vs the pure-numpy fallback.

Usage::

    python scripts/benchmark_kernels.py [--agents 10000] [--reps 20000]

Both backends draw from the same counter-based streams, so the printed
cross-backend deviation is the transcendental-function ulp noise, not a
statistical difference.  Select the backend at import time for real runs
with DIAGMKT_BACKEND={numba,numpy}.
"""
import argparse
import time

import numpy as np

from diagmkt._kernels import _build_numba_kernel, _sim_reps_numpy


def time_fn(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=10_000)
    parser.add_argument("--reps", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    shape = (args.seed, args.reps, args.agents, False, 1.0, 1.0, 1.0)
    print(f"shape: {args.reps} replications x {args.agents} agents "
          f"({args.reps * args.agents / 1e6:.0f}M signal draws)")

    kernel = _build_numba_kernel()
    t0 = time.perf_counter()
    kernel(args.seed, 64, 128, False, 1.0, 1.0, 1.0)
    print(f"numba compile: {time.perf_counter() - t0:.1f}s (one-off)")

    t_nb, out_nb = time_fn(kernel, *shape)
    print(f"numba:  {t_nb:8.2f}s  ({args.reps * args.agents / t_nb / 1e6:7.1f}M draws/s)")

    t_np, out_np = time_fn(_sim_reps_numpy, *shape, repeats=1)
    print(f"numpy:  {t_np:8.2f}s  ({args.reps * args.agents / t_np / 1e6:7.1f}M draws/s)")
    print(f"speedup: {t_np / t_nb:.2f}x")

    worst = max(
        float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        for a, b in zip(out_nb, out_np)
    )
    print(f"cross-backend worst relative deviation: {worst:.2e}")


if __name__ == "__main__":
    main()
