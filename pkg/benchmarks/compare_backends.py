#!/usr/bin/env python3
"""Benchmark the compiled kernels against their numpy fallbacks.

Covers the two hot loops selected at import time: the sieve restart round
loop and the greedy packing scan.  Run from the repository root:

    python benchmarks/compare_backends.py
"""

import time

import numpy as np

from convexfit.estimators import MeasurementSet, SieveConfig, fit_sieve_polytope
from convexfit.geometry import support_values
from convexfit.harness import benchmark_truths
from convexfit.sieve import HAVE_COMPILED
from convexfit.spheres import evenly_spaced_circle, maximal_packing, \
    uniform_directions


def time_sieve(backend, n, m, d, repeats=5):
    truth = benchmark_truths(d)["square" if d == 2 else "simplex"]
    rng = np.random.default_rng(11)
    U = evenly_spaced_circle(n) if d == 2 else uniform_directions(rng, d, n)
    Y = support_values(truth, U) + 0.1 * rng.standard_normal(n)
    data = MeasurementSet(U, Y, sigma=0.1, gamma=1.0)
    cfg = SieveConfig(m=m, restarts=20, backend=backend)
    best = float("inf")
    obj = None
    for _ in range(repeats):
        rng_run = np.random.default_rng(1)
        t0 = time.perf_counter()
        res = fit_sieve_polytope(data, cfg, rng_run)
        best = min(best, time.perf_counter() - t0)
        obj = res.objective
    return best, obj


def time_packing(backend, d, eps, repeats=3):
    best = float("inf")
    count = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        pack = maximal_packing(np.random.default_rng(0), d, eps,
                               backend=backend)
        best = min(best, time.perf_counter() - t0)
        count = len(pack)
    return best, count


def main():
    if not HAVE_COMPILED:
        print("compiled kernels are not built; nothing to compare")
        return

    print("sieve restart loop (20 restarts, objective must agree)")
    print(f"{'n':>6} {'m':>4} {'d':>2} {'python':>10} {'compiled':>10} "
          f"{'speedup':>8}")
    for n, m, d in ((64, 6, 2), (256, 8, 2), (1024, 10, 2), (4096, 13, 2),
                    (512, 37, 3), (2048, 59, 3)):
        tp, op = time_sieve("python", n, m, d)
        tc, oc = time_sieve("compiled", n, m, d)
        rel = abs(op - oc) / max(abs(op), 1e-300)
        flag = "" if rel < 1e-6 else f"  OBJ MISMATCH rel={rel:.1e}"
        print(f"{n:>6} {m:>4} {d:>2} {tp * 1e3:>8.1f}ms {tc * 1e3:>8.1f}ms "
              f"{tp / tc:>7.1f}x{flag}")

    print()
    print("greedy packing scan (counts must agree)")
    print(f"{'d':>2} {'eps':>8} {'python':>10} {'compiled':>10} "
          f"{'speedup':>8}")
    for d, eps in ((2, 0.05), (2, 0.02), (3, 0.2), (3, 0.1)):
        tp, cp = time_packing("python", d, eps)
        tc, cc = time_packing("compiled", d, eps)
        flag = "" if cp == cc else f"  COUNT MISMATCH {cp} vs {cc}"
        print(f"{d:>2} {eps:>8} {tp * 1e3:>8.1f}ms {tc * 1e3:>8.1f}ms "
              f"{tp / tc:>7.1f}x{flag}")


if __name__ == "__main__":
    main()
