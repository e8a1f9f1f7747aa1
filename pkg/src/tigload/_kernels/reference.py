"""Vectorized fallback implementation of the hot kernels.

Pure numpy, no compiled code. Produces bit-identical results to the Cython
kernel in ``_speedups.pyx``: all integer work is uint64 modular arithmetic
and the uint64-to-double conversion is exact, so there is no floating-point
drift between backends. The scalar ground truth lives in ``tigload.rng``.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
_MULT2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53

BACKEND = "python"


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _MULT1
    x = (x ^ (x >> np.uint64(27))) * _MULT2
    return x ^ (x >> np.uint64(31))


def fill_u64(key: int, start: int, count: int) -> np.ndarray:
    """uint64 outputs at counters [start, start+count) of stream ``key``."""
    counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _mix64(np.uint64(key & 0xFFFFFFFFFFFFFFFF) + counters * _GAMMA)


def fill_uniform(key: int, start: int, count: int) -> np.ndarray:
    """Uniform doubles in [0, 1) at counters [start, start+count)."""
    return (fill_u64(key, start, count) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def count_task_successes(key: int, start: int, probs: np.ndarray, reps: int) -> int:
    """Count replications in which every per-node roll passes.

    Replication ``r`` consumes counters ``start + r*n .. start + r*n + n - 1``
    in node order, so partial ranges simulated on different workers compose
    into the same stream.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    if n == 0:
        return reps
    successes = 0
    chunk = max(1, 2_000_000 // n)
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        rolls = fill_uniform(key, start + done * n, m * n).reshape(m, n)
        successes += int((rolls < probs).all(axis=1).sum())
        done += m
    return successes


def node_pass_counts(key: int, start: int, probs: np.ndarray, reps: int) -> np.ndarray:
    """Per-node pass counts over ``reps`` replications (same stream layout)."""
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rolls = fill_uniform(key, start, reps * n).reshape(reps, n)
    return (rolls < probs).sum(axis=0).astype(np.int64)


def sample_bernoulli(key: int, start: int, probs: np.ndarray) -> np.ndarray:
    """One Bernoulli draw per probability; draw ``i`` uses counter ``start+i``."""
    probs = np.asarray(probs, dtype=np.float64)
    rolls = fill_uniform(key, start, probs.shape[0])
    return (rolls < probs).astype(np.uint8)
