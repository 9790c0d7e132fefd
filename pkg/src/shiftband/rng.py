"""Seeded, counter-based random streams.

Every stream is a ``numpy.random.Generator`` over ``Philox`` keyed by a
``SeedSequence`` whose spawn key encodes (purpose, extra keys).  Two streams
with different purposes never share state, so environment noise and the
algorithm's internal coin flips stay independent.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "env": 0,  # environment construction (segment draws, drift paths)
    "noise": 1,  # reward noise
    "select": 2,  # arm selection inside a policy
    "schedule": 3,  # replay schedule coins
}


def stream(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    if purpose not in PURPOSES:
        raise KeyError(f"unknown stream purpose {purpose!r}")
    spawn_key = (PURPOSES[purpose],) + tuple(int(k) & 0xFFFFFFFFFFFFFFFF for k in keys)
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


class UniformTape:
    """Buffered uniform [0, 1) draws handed out as Python floats.

    Draws are made in blocks so the per-round cost is a list index rather
    than a Generator call.  With ``width=None`` each call returns one float;
    with an integer ``width`` each call returns a list of that many floats.  Consumption is fixed per call,
    which keeps two policies fed from equal seeds on the same tape.
    """

    def __init__(self, rng: np.random.Generator, width: int | None = None, block: int = 2048):
        self._rng = rng
        self.width = width
        self._block = block
        self._rows: list = []
        self._pos = 0

    def _refill(self):
        if self.width is None:
            self._rows = self._rng.random(self._block).tolist()
        else:
            self._rows = self._rng.random((self._block, self.width)).tolist()
        self._pos = 0

    def next(self):
        if self._pos >= len(self._rows):
            self._refill()
        row = self._rows[self._pos]
        self._pos += 1
        return row
