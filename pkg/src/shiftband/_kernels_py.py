"""Pure numpy implementations of the hot scans.

Both routines work on 1-based round indices with row 0 of every prefix array
holding zeros.

``first_trigger(gap, start, K, tol)``
    Smallest ``s2`` in ``(start, T]`` such that some ``s1`` in ``[start, s2)``
    has ``sum(gap[s1..s2]) >= sqrt(K * (s2 - s1)) - tol``; ``0`` if none.

``scan_range`` / ``scan_dyadic``
    For the interval end ``s2`` and each arm ``a``, look for starts ``s1``
    with ``max_b (P[s2,b] - P[s1-1,b]) - (P[s2,a] - P[s1-1,a]) > thr[s2-s1]``
    and raise ``latest[a]`` to the largest such ``s1``.  ``scan_range`` tries
    every ``s1`` in ``[lo, s2)``; ``scan_dyadic`` tries ``s2 + 1 - 2**j``
    (``j >= 1``) plus the explicit ``extra`` starts, restricted to
    ``[lo, s2)``.
"""

from __future__ import annotations

import numpy as np


def first_trigger(gap, start, K, tol):
    gap = np.asarray(gap, dtype=float)
    T = gap.shape[0] - 1
    prefix = np.concatenate(([0.0], np.cumsum(gap[1:])))
    root = np.sqrt(K * np.arange(T + 1, dtype=float))
    for s2 in range(start + 1, T + 1):
        s1 = np.arange(start, s2)
        sums = prefix[s2] - prefix[s1 - 1]
        if np.any(sums >= root[s2 - s1] - tol):
            return s2
    return 0


def _apply(P, s2, starts, thr, latest):
    if starts.size == 0:
        return
    diff = P[s2] - P[starts - 1]
    stat = diff.max(axis=1)[:, None] - diff
    hit = stat > thr[s2 - starts][:, None]
    for b in np.flatnonzero(hit.any(axis=0)):
        s1 = starts[hit[:, b]].max()
        if s1 > latest[b]:
            latest[b] = s1


def scan_range(P, s2, lo, thr, latest):
    floor = max(int(latest.min()), lo - 1)
    _apply(P, s2, np.arange(floor + 1, s2), thr, latest)


def scan_dyadic(P, s2, lo, extra, thr, latest):
    starts = []
    length = 2
    while s2 + 1 - length >= lo:
        starts.append(s2 + 1 - length)
        length *= 2
    starts.extend(int(s) for s in extra if lo <= s < s2)
    _apply(P, s2, np.asarray(starts, dtype=np.int64), thr, latest)
