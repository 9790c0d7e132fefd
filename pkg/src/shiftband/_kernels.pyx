# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scans for the two quadratic hot loops.

Semantics are identical to :mod:`shiftband._kernels_py`; see that module for
the reference description of each routine.
"""

from libc.math cimport sqrt

import numpy as np


def first_trigger(const double[::1] gap, long start, long K, double tol):
    cdef Py_ssize_t T = gap.shape[0] - 1
    cdef Py_ssize_t s1, s2, n
    cdef double[::1] prefix = np.zeros(T + 1)
    cdef double[::1] root = np.empty(T + 1)
    cdef double acc = 0.0
    for s2 in range(1, T + 1):
        acc += gap[s2]
        prefix[s2] = acc
    for n in range(T + 1):
        root[n] = sqrt(<double>(K * n))
    for s2 in range(start + 1, T + 1):
        for s1 in range(s2 - 1, start - 1, -1):
            if prefix[s2] - prefix[s1 - 1] >= root[s2 - s1] - tol:
                return s2
    return 0


cdef inline void _check(const double[:, ::1] P, Py_ssize_t s2, Py_ssize_t s1,
                        const double[::1] thr, long long[::1] latest) noexcept nogil:
    cdef Py_ssize_t K = P.shape[1]
    cdef Py_ssize_t b
    cdef double best = -1e300
    cdef double d
    for b in range(K):
        d = P[s2, b] - P[s1 - 1, b]
        if d > best:
            best = d
    for b in range(K):
        if s1 > latest[b]:
            d = P[s2, b] - P[s1 - 1, b]
            if best - d > thr[s2 - s1]:
                latest[b] = s1


def scan_range(const double[:, ::1] P, long s2, long lo,
               const double[::1] thr, long long[::1] latest):
    cdef Py_ssize_t K = P.shape[1]
    cdef Py_ssize_t b, s1
    cdef long long floor = latest[0]
    for b in range(1, K):
        if latest[b] < floor:
            floor = latest[b]
    if floor < lo - 1:
        floor = lo - 1
    s1 = s2 - 1
    while s1 > floor:
        _check(P, s2, s1, thr, latest)
        s1 -= 1


def scan_dyadic(const double[:, ::1] P, long s2, long lo, const long long[::1] extra,
                const double[::1] thr, long long[::1] latest):
    cdef Py_ssize_t i
    cdef long long length = 2
    cdef long long s1 = s2 + 1 - length
    while s1 >= lo:
        _check(P, s2, s1, thr, latest)
        length *= 2
        s1 = s2 + 1 - length
    for i in range(extra.shape[0]):
        s1 = extra[i]
        if lo <= s1 < s2:
            _check(P, s2, s1, thr, latest)
