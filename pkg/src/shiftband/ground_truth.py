"""Structural quantities of a mean sequence that no policy can observe.

An arm *incurs significant regret* on ``[s1, s2]`` (``s1 < s2``) when its
summed worst gap over the interval reaches ``sqrt(K * (s2 - s1))``.  Starting
from ``tau_0 = 1``, a *significant shift* is recorded at the first round by
which every arm has incurred significant regret since the previous shift;
the stretches between shifts are the phases.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .env import RewardModel
from .errors import ResourceLimitError

DEFAULT_CAP = 20000
# absolute slack on the significant-regret comparison; both sides are sums of
# at most T doubles so this only matters at exact ties
TIE_TOL = 1e-9


def _as_means(means) -> np.ndarray:
    if isinstance(means, RewardModel):
        return means.means
    return np.asarray(means, dtype=float)


def _gap_column(means: np.ndarray, a: int) -> np.ndarray:
    gap = np.zeros(means.shape[0] + 1)
    gap[1:] = means.max(axis=1) - means[:, a]
    return np.ascontiguousarray(gap)


def significant_regret_trigger(means, phase_start: int, a: int) -> int | None:
    """First round ``s2 > phase_start`` at which arm ``a`` has incurred
    significant regret on some ``[s1, s2]`` with ``s1 >= phase_start``."""
    m = _as_means(means)
    s2 = kernels.first_trigger(_gap_column(m, a), int(phase_start), m.shape[1], TIE_TOL)
    return int(s2) if s2 else None


def compute_total_variation(means) -> float:
    m = _as_means(means)
    if m.shape[0] < 2:
        return 0.0
    return float(np.abs(np.diff(m, axis=0)).max(axis=1).sum())


def count_best_arm_switches(means) -> int:
    best = np.argmax(_as_means(means), axis=1)
    return int(np.count_nonzero(best[1:] != best[:-1]))


def count_changes(means) -> int:
    """Number of rounds ``t >= 2`` at which any arm's mean moves."""
    m = _as_means(means)
    return int(np.count_nonzero(np.any(m[1:] != m[:-1], axis=1)))


@dataclass
class PhaseAnnotation:
    T: int
    K: int
    tau: list[int]
    last_safe_arm: list[int]
    # triggers[i][a]: first trigger round of arm a in phase i (T + 1 if never)
    triggers: list[list[int]]
    total_variation: float = 0.0
    best_arm_switches: int = 0
    num_changes: int = 0
    model_hash: str | None = None
    _starts: list[int] = field(default_factory=list, repr=False, compare=False)
    _safe_cache: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self._starts = list(self.tau[:-1])

    @property
    def num_shifts(self) -> int:
        return len(self.tau) - 2

    @property
    def num_phases(self) -> int:
        return len(self.tau) - 1

    def phase_of(self, t: int) -> int:
        return bisect.bisect_right(self._starts, t) - 1

    def safe_set(self, t: int) -> list[int]:
        """Arms that have not yet incurred significant regret in ``t``'s phase."""
        trig = self.triggers[self.phase_of(t)]
        return [a for a in range(self.K) if trig[a] > t]

    def safe_sets(self) -> list[tuple[int, ...]]:
        """``safe_set(t)`` for every round, as tuples (cached)."""
        if self._safe_cache is None:
            out = []
            for i, (a, b) in enumerate(zip(self.tau, self.tau[1:])):
                trig = self.triggers[i]
                out.extend(tuple(x for x in range(self.K) if trig[x] > t) for t in range(a, b))
            self._safe_cache = out
        return self._safe_cache

    def last_safe_at(self, t: int) -> int:
        return self.last_safe_arm[self.phase_of(t)]

    def phase_lengths(self) -> list[int]:
        return [b - a for a, b in zip(self.tau, self.tau[1:])]

    def to_dict(self, include_triggers: bool = True) -> dict:
        d = {
            "T": self.T,
            "K": self.K,
            "tau": list(self.tau),
            "L": self.num_shifts,
            "last_safe_arm": list(self.last_safe_arm),
            "V": self.total_variation,
            "S": self.best_arm_switches,
            "num_changes": self.num_changes,
            "model_hash": self.model_hash,
        }
        if include_triggers:
            d["triggers"] = [list(r) for r in self.triggers]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseAnnotation":
        return cls(
            T=d["T"],
            K=d["K"],
            tau=list(d["tau"]),
            last_safe_arm=list(d["last_safe_arm"]),
            triggers=[list(r) for r in d["triggers"]],
            total_variation=d.get("V", 0.0),
            best_arm_switches=d.get("S", 0),
            num_changes=d.get("num_changes", 0),
            model_hash=d.get("model_hash"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def compute_significant_shifts(means, cap: int = DEFAULT_CAP) -> PhaseAnnotation:
    """Exact shift times, last safe arms and per-phase trigger rounds.

    Cost is quadratic in phase length, so horizons above ``cap`` are refused.
    """
    model = means if isinstance(means, RewardModel) else None
    m = _as_means(means)
    T, K = m.shape
    if T > cap:
        raise ResourceLimitError(
            f"T={T} exceeds the exact-scan cap of {cap} rounds; use sparse mode or raise the cap"
        )
    columns = [_gap_column(m, a) for a in range(K)]
    tau = [1]
    last_safe, triggers = [], []
    while True:
        start = tau[-1]
        trig = []
        for a in range(K):
            s2 = kernels.first_trigger(columns[a], start, K, TIE_TOL)
            trig.append(int(s2) if s2 else T + 1)
        latest = max(trig)
        last_safe.append(trig.index(latest))
        triggers.append(trig)
        if latest > T:
            tau.append(T + 1)
            break
        tau.append(latest)
    return PhaseAnnotation(
        T=T,
        K=K,
        tau=tau,
        last_safe_arm=last_safe,
        triggers=triggers,
        total_variation=compute_total_variation(m),
        best_arm_switches=count_best_arm_switches(m),
        num_changes=count_changes(m),
        model_hash=model.digest() if model is not None else None,
    )


@dataclass(frozen=True)
class Bounds:
    sum_sqrt: float
    jensen_bound: float
    tv_bound: float


def theoretical_bounds(annotation: PhaseAnnotation, K: int | None = None, T: int | None = None,
                       total_variation: float | None = None) -> Bounds:
    """Unscaled regret yardsticks: per-phase root sum, its Jensen relaxation
    ``sqrt((L+1) K T)`` and the variation form ``sqrt(KT) + (2KV)^(1/3) T^(2/3)``."""
    K = annotation.K if K is None else K
    T = annotation.T if T is None else T
    V = annotation.total_variation if total_variation is None else total_variation
    sum_sqrt = sum(math.sqrt(K * n) for n in annotation.phase_lengths())
    jensen = math.sqrt(annotation.num_phases * K * T)
    tv = math.sqrt(K * T) + (2.0 * K * V) ** (1.0 / 3.0) * T ** (2.0 / 3.0)
    return Bounds(sum_sqrt, jensen, tv)
