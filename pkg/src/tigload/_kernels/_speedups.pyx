# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the counter-based random source and the Monte Carlo
simulation inner loop. Semantically identical, bit for bit, to
``tigload._kernels.reference``; see ``tigload._kernels.vectors`` for the
frozen stream values both must reproduce."""

import numpy as np

from libc.stdint cimport uint8_t, uint64_t, int64_t

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15UL
cdef uint64_t MULT1 = 0xBF58476D1CE4E5B9UL
cdef uint64_t MULT2 = 0x94D049BB133111EBUL
cdef double INV_2_53 = 1.0 / 9007199254740992.0

BACKEND = "c"


cdef inline uint64_t mix64(uint64_t x) nogil:
    x = (x ^ (x >> 30)) * MULT1
    x = (x ^ (x >> 27)) * MULT2
    return x ^ (x >> 31)


cdef inline uint64_t u64_at(uint64_t key, uint64_t counter) nogil:
    return mix64(key + (counter + 1) * GAMMA)


cdef inline double uniform_at(uint64_t key, uint64_t counter) nogil:
    return <double>(u64_at(key, counter) >> 11) * INV_2_53


def fill_u64(key, start, count):
    """uint64 outputs at counters [start, start+count) of stream ``key``."""
    cdef uint64_t k = key & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t s = start
    cdef Py_ssize_t n = count, i
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] view = out
    with nogil:
        for i in range(n):
            view[i] = u64_at(k, s + i)
    return out


def fill_uniform(key, start, count):
    """Uniform doubles in [0, 1) at counters [start, start+count)."""
    cdef uint64_t k = key & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t s = start
    cdef Py_ssize_t n = count, i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] view = out
    with nogil:
        for i in range(n):
            view[i] = uniform_at(k, s + i)
    return out


def count_task_successes(key, start, probs, reps):
    """Count replications in which every per-node roll passes."""
    cdef uint64_t k = key & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t s = start
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef int64_t r_total = reps
    cdef int64_t successes = 0, r
    cdef Py_ssize_t j
    cdef bint ok
    if n == 0:
        return reps
    with nogil:
        for r in range(r_total):
            ok = True
            for j in range(n):
                if uniform_at(k, s + (<uint64_t>r) * n + j) >= p[j]:
                    ok = False
                    break
            if ok:
                successes += 1
    return successes


def node_pass_counts(key, start, probs, reps):
    """Per-node pass counts over ``reps`` replications (same stream layout)."""
    cdef uint64_t k = key & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t s = start
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef int64_t r_total = reps
    cdef int64_t r
    cdef Py_ssize_t j
    out = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] counts = out
    if n == 0:
        return out
    with nogil:
        for r in range(r_total):
            for j in range(n):
                if uniform_at(k, s + (<uint64_t>r) * n + j) < p[j]:
                    counts[j] += 1
    return out


def sample_bernoulli(key, start, probs):
    """One Bernoulli draw per probability; draw ``i`` uses counter ``start+i``."""
    cdef uint64_t k = key & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t s = start
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i
    out = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] view = out
    with nogil:
        for i in range(n):
            view[i] = 1 if uniform_at(k, s + i) < p[i] else 0
    return out
