"""Meta-elimination with randomized replays and restarts.

The procedure runs in episodes.  Each episode starts a base learner that
samples uniformly from its candidate set; base learners occasionally launch
child replays (which reset the candidate set to all arms) on a randomized
schedule.  An arm is evicted when an importance-weighted estimate of its
aggregate gap to some other arm over an interval exceeds a
``log(T) * sqrt(C0 * max(K * len, K**2))`` threshold.  Evictions found by any
learner also leave the episode's master set; when the master set empties a
new episode begins.

The recursion is realized as an explicit stack of :class:`Frame` objects.
Only the top frame selects arms.

Interval sums of the gap estimate are differences of per-arm prefix sums of
``|A_t| * Y_t * 1{pi_t = b}``.  Each round only intervals ending at the
newest round are scanned; ``latest[a]`` keeps the largest interval start
found so far at which arm ``a`` fails the test, so a learner that started at
round ``sigma`` evicts ``a`` exactly when ``latest[a] >= sigma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import ConfigError, HorizonExhausted, ProtocolError, ShiftbandError, ValidationError
from .rng import UniformTape, stream

VARIANTS = ("main", "remark")
SCAN_MODES = ("exact", "dyadic")


@dataclass(frozen=True)
class EvictionConfig:
    C0: float = 4.0
    threshold_variant: str = "main"
    scan_mode: str = "dyadic"

    def __post_init__(self):
        if not self.C0 > 0:
            raise ConfigError(f"C0 must be positive, got {self.C0}")
        if self.threshold_variant not in VARIANTS:
            raise ConfigError(f"threshold_variant must be one of {VARIANTS}")
        if self.scan_mode not in SCAN_MODES:
            raise ConfigError(f"scan_mode must be one of {SCAN_MODES}")

    def threshold(self, length: int, K: int, T: int) -> float:
        """Eviction threshold for an interval with ``s2 - s1 = length``."""
        L = math.log(T)
        if self.threshold_variant == "main":
            return L * math.sqrt(self.C0 * max(K * length, K * K))
        return math.sqrt(self.C0 * max(K * L * length, K * K * L * L))

    def threshold_table(self, K: int, T: int) -> np.ndarray:
        n = np.arange(T + 1, dtype=float)
        L = math.log(T)
        if self.threshold_variant == "main":
            return L * np.sqrt(self.C0 * np.maximum(K * n, K * K))
        return np.sqrt(self.C0 * np.maximum(K * L * n, K * K * L * L))


def duration_grid(T: int) -> list[int]:
    top = max(1, math.ceil(math.log2(T))) if T > 1 else 0
    return [2**j for j in range(1, top + 1)]


class ReplaySchedule:
    """Lazily sampled replay coins.

    At round ``s`` after the episode start, duration ``m`` fires independently
    with probability ``min(1, 1/sqrt(m * (s - episode_start)))``.  One row of
    coins is consumed per queried round.
    """

    def __init__(self, T: int, rng: np.random.Generator, episode_start: int = 1):
        self.durations = duration_grid(T)
        self._inv_root = [1.0 / math.sqrt(m) for m in self.durations]
        self._tape = UniformTape(rng, width=len(self.durations))
        self.episode_start = episode_start

    def reset(self, episode_start: int):
        self.episode_start = episode_start

    def probabilities(self, s: int) -> list[float]:
        offset = s - self.episode_start
        if offset < 1:
            return [0.0] * len(self.durations)
        r = 1.0 / math.sqrt(offset)
        return [min(1.0, c * r) for c in self._inv_root]

    def fired(self, s: int) -> list[int]:
        if not self.durations:
            return []
        coins = self._tape.next()
        probs = self.probabilities(s)
        return [m for m, u, p in zip(self.durations, coins, probs) if u < p]

    def draw(self, s: int) -> int:
        """Largest duration firing at round ``s``, or 0."""
        fired = self.fired(s)
        return fired[-1] if fired else 0


class Frame:
    __slots__ = ("start", "duration", "arms")

    def __init__(self, start: int, duration: int, arms: tuple[int, ...]):
        self.start = start
        self.duration = duration
        self.arms = arms

    def __repr__(self):
        return f"Frame(start={self.start}, duration={self.duration}, arms={self.arms})"


class Event(NamedTuple):
    type: str
    round: int
    payload: dict

    def to_dict(self) -> dict:
        return {"type": self.type, "round": self.round, "payload": self.payload}


class MetaPolicy:
    """Online META learner for a known horizon ``T``.

    Call :meth:`select` and :meth:`observe` alternately, once per round.
    """

    name = "meta"

    def __init__(self, K: int, T: int, config: EvictionConfig | None = None, seed: int = 0, *,
                 select_rng: np.random.Generator | None = None,
                 schedule_rng: np.random.Generator | None = None):
        if K < 1 or T < 1:
            raise ConfigError("K and T must be positive")
        self.K, self.T = K, T
        self.config = config or EvictionConfig()
        self._tape = UniformTape(select_rng if select_rng is not None else stream(seed, "select"))
        self.schedule = ReplaySchedule(T, schedule_rng if schedule_rng is not None else stream(seed, "schedule"))
        self._thr = np.ascontiguousarray(self.config.threshold_table(K, T))
        self._exact = self.config.scan_mode == "exact"
        self._all = tuple(range(K))
        self.P = np.zeros((T + 1, K))
        self.latest = np.full(K, -1, dtype=np.int64)
        self.t = 1
        self.episode = 0
        self.events: list[Event] = []
        self.played_sets: list[tuple[int, ...]] = []
        self._pending: int | None = None
        self._weight = 0
        self.new_episode()

    # -- episode / frame bookkeeping ---------------------------------------

    def new_episode(self):
        t = self.t
        self.episode += 1
        self.episode_start = t
        self.master = self._all
        self.latest.fill(-1)
        self.schedule.reset(t)
        self.stack = [Frame(t, self.T + 1 - t, self._all)]
        self._sync_starts()
        self.events.append(Event("episode_start", t, {"episode": self.episode}))

    def _sync_starts(self):
        self._starts = np.array([f.start for f in self.stack], dtype=np.int64)

    def _push(self, t: int, m: int):
        self.stack.append(Frame(t, m, self._all))
        self._sync_starts()
        self.events.append(Event("replay_start", t, {"duration": m, "depth": len(self.stack) - 1}))

    def _pop(self, t: int, reason: str):
        f = self.stack.pop()
        if not self.stack:
            raise ShiftbandError("internal: episode frame popped")
        self._sync_starts()
        self.events.append(Event("replay_end", t, {"start": f.start, "duration": f.duration, "reason": reason}))

    @property
    def depth(self) -> int:
        return len(self.stack)

    @property
    def active_set(self) -> tuple[int, ...]:
        return self.stack[-1].arms

    # -- policy protocol -----------------------------------------------------

    def select(self) -> int:
        if self._pending is not None:
            raise ProtocolError("select called twice without observe")
        if self.t > self.T:
            raise HorizonExhausted(f"horizon {self.T} exhausted")
        arms = self.stack[-1].arms
        n = len(arms)
        if n == 0:
            raise ShiftbandError("internal: empty candidate set at selection")
        arm = arms[int(self._tape.next() * n)]
        self._pending = arm
        self._weight = n
        self.played_sets.append(arms)
        return arm

    def observe(self, arm: int, reward: float):
        if self._pending is None:
            raise ProtocolError("observe called without a preceding select")
        if arm != self._pending:
            raise ProtocolError(f"observed arm {arm} but selected {self._pending}")
        if not 0.0 <= reward <= 1.0:
            raise ValidationError(f"reward {reward} outside [0, 1]")
        t = self.t
        P = self.P
        P[t] = P[t - 1]
        P[t, arm] += self._weight * reward
        self._pending = None
        t += 1
        self.t = t
        if t > self.T:
            return
        self._scan(t - 1)
        m = self.schedule.draw(t)
        if m:
            # the child starts playing right away; evictions resume once a
            # learner finishes a round
            self._push(t, m)
            return
        self._settle(t)

    # -- eviction --------------------------------------------------------------

    def _scan(self, s2: int):
        lo = self.episode_start
        if s2 - lo < 1:
            return
        if self._exact:
            kernels.scan_range(self.P, s2, lo, self._thr, self.latest)
        else:
            kernels.scan_dyadic(self.P, s2, lo, self._starts, self._thr, self.latest)

    def _settle(self, t: int):
        stack = self.stack
        lat = self.latest.tolist()
        while True:
            top = stack[-1]
            if t > top.start + top.duration:
                self._pop(t, "duration")
                continue
            t_ep = self.episode_start
            if any(lat[a] >= t_ep for a in self.master):
                keep = []
                for a in self.master:
                    if lat[a] >= t_ep:
                        self.events.append(Event("evict_master", t, {"arm": a}))
                    else:
                        keep.append(a)
                self.master = tuple(keep)
            start = top.start
            if any(lat[a] >= start for a in top.arms):
                keep = []
                for a in top.arms:
                    if lat[a] >= start:
                        self.events.append(Event("evict_frame", t, {"arm": a, "frame_start": start}))
                    else:
                        keep.append(a)
                top.arms = tuple(keep)
            if not self.master:
                self.events.append(Event("restart", t, {"episode_start": t_ep}))
                while len(stack) > 1:
                    self._pop(t, "unwind")
                self.new_episode()
                return
            if not top.arms:
                self._pop(t, "empty")
                continue
            return

    # -- reporting ---------------------------------------------------------------

    def restart_rounds(self) -> list[int]:
        return [e.round for e in self.events if e.type == "restart"]

    def replay_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for e in self.events:
            if e.type == "replay_start":
                m = e.payload["duration"]
                counts[m] = counts.get(m, 0) + 1
        return counts

    def gap_estimate_sum(self, a_prime: int, a: int, s1: int, s2: int) -> float:
        return gap_estimate_sum(self.P, a_prime, a, s1, s2)

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)


def gap_estimate_sum(P: np.ndarray, a_prime: int, a: int, s1: int, s2: int) -> float:
    """Sum over rounds ``s1..s2`` of the importance-weighted estimate of
    ``mu(a_prime) - mu(a)``, read off the prefix sums."""
    if s1 > s2:
        raise ValueError("need s1 <= s2")
    return float((P[s2, a_prime] - P[s1 - 1, a_prime]) - (P[s2, a] - P[s1 - 1, a]))


def eviction_trigger(P: np.ndarray, a: int, window_start: int, now: int, config: EvictionConfig,
                     T: int, extra_starts=()) -> bool:
    """Whether arm ``a`` fails the test on an interval ``[s1, now - 1]`` with
    ``s1 >= window_start``.  Stateless; scans using ``config.scan_mode``."""
    if window_start >= now:
        raise ValueError("need window_start < now")
    P = np.ascontiguousarray(P, dtype=float)
    K = P.shape[1]
    thr = np.ascontiguousarray(config.threshold_table(K, T))
    latest = np.full(K, -1, dtype=np.int64)
    s2 = now - 1
    if s2 - window_start < 1:
        return False
    if config.scan_mode == "exact":
        kernels.scan_range(P, s2, window_start, thr, latest)
    else:
        starts = np.asarray(sorted({window_start, *extra_starts}), dtype=np.int64)
        kernels.scan_dyadic(P, s2, window_start, starts, thr, latest)
    return bool(latest[a] >= window_start)


class DoublingMeta:
    """Horizon-free wrapper: fresh META instances with horizons 2, 4, 8, ...

    Instance ``k`` covers global rounds ``2**k - 1 .. 2**(k+1) - 2``.
    """

    name = "meta-doubling"

    def __init__(self, K: int, config: EvictionConfig | None = None, seed: int = 0,
                 factory: Callable[[int, int], MetaPolicy] | None = None):
        self.K = K
        self.config = config or EvictionConfig()
        self.seed = seed
        self._factory = factory or self._default_factory
        self.t = 1
        self.k = 0
        self.inner: MetaPolicy | None = None
        self.horizons: list[int] = []
        self._past_events: list[Event] = []
        self._offset = 0

    def _default_factory(self, horizon: int, k: int) -> MetaPolicy:
        return MetaPolicy(self.K, horizon, self.config,
                          select_rng=stream(self.seed, "select", k),
                          schedule_rng=stream(self.seed, "schedule", k))

    def _shift(self, events, offset):
        return [Event(e.type, e.round + offset, e.payload) for e in events]

    def _advance(self):
        if self.inner is not None:
            self._past_events.extend(self._shift(self.inner.events, self._offset))
        self.k += 1
        horizon = 2**self.k
        self._offset = horizon - 2
        self.inner = self._factory(horizon, self.k)
        self.horizons.append(horizon)

    def select(self) -> int:
        if self.inner is None or self.inner.t > self.inner.T:
            self._advance()
        return self.inner.select()

    def observe(self, arm: int, reward: float):
        if self.inner is None:
            raise ProtocolError("observe called without a preceding select")
        self.inner.observe(arm, reward)
        self.t += 1

    @property
    def events(self) -> list[Event]:
        cur = self._shift(self.inner.events, self._offset) if self.inner is not None else []
        return self._past_events + cur

    def restart_rounds(self) -> list[int]:
        return [e.round for e in self.events if e.type == "restart"]

    def replay_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for e in self.events:
            if e.type == "replay_start":
                counts[e.payload["duration"]] = counts.get(e.payload["duration"], 0) + 1
        return counts


def restart_violations(events, K: int) -> list[int]:
    """Restart rounds not preceded, within their episode, by master
    evictions covering all ``K`` arms."""
    bad = []
    evicted: set[int] = set()
    for e in events:
        if e.type == "episode_start":
            evicted = set()
        elif e.type == "evict_master":
            evicted.add(e.payload["arm"])
        elif e.type == "restart" and len(evicted) < K:
            bad.append(e.round)
    return bad
