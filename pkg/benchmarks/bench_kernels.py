#!/usr/bin/env python3
"""Benchmark the compiled kernels against the vectorized fallback.

Runs the two hot paths (uniform stream generation and the Monte Carlo
task-success loop) at several sizes and prints a timing table. Build the
extension first with ``python setup.py build_ext --inplace``; without it
only the fallback column is populated.
"""

import argparse
import time

import numpy as np

from tigload._kernels import reference

try:
    from tigload._kernels import _speedups
except ImportError:
    _speedups = None


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    probs = np.exp(-(0.05 * np.array([1.0, 2.5, 4.0, 1.0, 3.0, 6.0, 2.0, 5.0]) + 0.05))

    cases = []
    for n in (100_000, 1_000_000, 10_000_000):
        cases.append((f"fill_uniform n={n:>10,}",
                      lambda impl, n=n: impl.fill_uniform(42, 0, n)))
    for reps in (10_000, 100_000, 1_000_000):
        cases.append((f"task_successes 8 nodes x {reps:>9,} reps",
                      lambda impl, r=reps: impl.count_task_successes(42, 0, probs, r)))

    backends = [("python", reference)]
    if _speedups is not None:
        backends.append(("c", _speedups))
    else:
        print("compiled kernels not built; showing fallback only\n")

    header = f"{'case':<42}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, body in cases:
        times = [timeit(lambda impl=impl: body(impl), args.repeats)
                 for _, impl in backends]
        row = f"{label:<42}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    if _speedups is not None:
        same = np.array_equal(reference.fill_u64(7, 0, 100_000),
                              _speedups.fill_u64(7, 0, 100_000))
        print(f"\nbit-identical streams across backends: {same}")


if __name__ == "__main__":
    main()
