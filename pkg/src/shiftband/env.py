"""Oblivious-adversary reward environments.

A :class:`RewardModel` holds an explicit ``T x K`` matrix of mean rewards and
a noise family per arm.  Rounds are 1-based (``1..T``), arms are 0-based
(``0..K-1``).  Models are built from an :class:`EnvSpec`, which is a small
JSON-serializable description that always expands to the same matrix.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, RangeError, ValidationError
from .rng import stream

NOISE_FAMILIES = ("bernoulli", "uniform", "deterministic")
ENV_KINDS = ("piecewise", "drifting", "custom")


@dataclass(frozen=True, eq=False)
class RewardModel:
    means: np.ndarray
    noise: tuple[str, ...]
    width: float = 0.25  # half-width for the uniform family

    def __post_init__(self):
        means = np.array(self.means, dtype=float, copy=True)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValidationError(f"mean matrix must be 2-d and non-empty, got shape {means.shape}")
        if not np.all(np.isfinite(means)) or means.min() < 0.0 or means.max() > 1.0:
            bad = np.argwhere(~((means >= 0.0) & (means <= 1.0)))[0]
            raise ValidationError(
                f"mean at round {bad[0] + 1}, arm {bad[1]} is {means[tuple(bad)]!r}; must lie in [0, 1]"
            )
        noise = self.noise
        if isinstance(noise, str):
            noise = (noise,) * means.shape[1]
        noise = tuple(noise)
        if len(noise) != means.shape[1]:
            raise ValidationError(f"need one noise family per arm ({means.shape[1]}), got {len(noise)}")
        for fam in noise:
            if fam not in NOISE_FAMILIES:
                raise ValidationError(f"unknown noise family {fam!r}")
        if self.width < 0:
            raise ValidationError("uniform half-width must be non-negative")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "noise", noise)

    @property
    def horizon(self) -> int:
        return self.means.shape[0]

    @property
    def num_arms(self) -> int:
        return self.means.shape[1]

    def _check(self, t: int, a: int):
        if not 1 <= t <= self.horizon:
            raise RangeError(f"round {t} outside [1, {self.horizon}]")
        if not 0 <= a < self.num_arms:
            raise RangeError(f"arm {a} outside [0, {self.num_arms})")

    def mean(self, t: int, a: int) -> float:
        self._check(t, a)
        return float(self.means[t - 1, a])

    def _halfwidth(self, mu):
        # shrink so the clipped uniform keeps its mean exactly
        return np.minimum(self.width, np.minimum(mu, 1.0 - mu))

    def _transform(self, u, mu, fam):
        if fam == "bernoulli":
            return (u < mu).astype(float) if isinstance(u, np.ndarray) else float(u < mu)
        if fam == "uniform":
            return mu + self._halfwidth(mu) * (2.0 * u - 1.0)
        return mu + 0.0 * u

    def sample(self, t: int, a: int, rng: np.random.Generator) -> float:
        self._check(t, a)
        mu = float(self.means[t - 1, a])
        return float(self._transform(rng.random(), mu, self.noise[a]))

    def sample_table(self, rng: np.random.Generator) -> np.ndarray:
        """Draw rewards for every (round, arm) cell at once; shape ``(T, K)``."""
        u = rng.random(self.means.shape)
        out = np.empty_like(self.means)
        for a, fam in enumerate(self.noise):
            out[:, a] = self._transform(u[:, a], self.means[:, a], fam)
        return out

    def gaps(self) -> np.ndarray:
        """Worst gap ``max_b mu_t(b) - mu_t(a)`` for every cell, shape ``(T, K)``."""
        return self.means.max(axis=1, keepdims=True) - self.means

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.means).tobytes())
        h.update(repr((self.noise, self.width)).encode())
        return h.hexdigest()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"arm_{a + 1}" for a in range(self.num_arms)])
        for t, row in enumerate(self.means, start=1):
            w.writerow([t] + [f"{x:.10f}" for x in row])
        return buf.getvalue()


def constant_model(T: int, mean_vector: Sequence[float], noise="bernoulli", width=0.25) -> RewardModel:
    return RewardModel(np.tile(np.asarray(mean_vector, dtype=float), (T, 1)), noise, width)


def gen_custom(mean_matrix, noise="bernoulli", width=0.25) -> RewardModel:
    return RewardModel(np.asarray(mean_matrix, dtype=float), noise, width)


def segments_model(T: int, segments: Sequence[tuple[int, Sequence[float]]], noise="bernoulli", width=0.25):
    """Piecewise-constant model from ``(start_round, mean_vector)`` pairs.

    A segment starting at round ``s`` covers ``s`` up to the next start minus
    one, so a change is visible as ``mu_s != mu_{s-1}``.
    """
    if not segments:
        raise ConfigError("at least one segment is required")
    starts = [int(s) for s, _ in segments]
    if starts[0] != 1 or any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] > T:
        raise ConfigError(f"segment starts must begin at 1 and increase within [1, {T}], got {starts}")
    K = len(segments[0][1])
    means = np.empty((T, K))
    ends = starts[1:] + [T + 1]
    for (s, vec), e in zip(segments, ends):
        if len(vec) != K:
            raise ConfigError("all segment mean vectors need the same length")
        means[s - 1 : e - 1] = vec
    return RewardModel(means, noise, width)


def gen_piecewise(seed: int, T: int, K: int, num_segments: int, min_gap: float,
                  noise="bernoulli", width=0.25) -> RewardModel:
    """Random piecewise-stationary model.

    Boundaries are drawn without replacement from rounds ``2..T``.  In every
    segment the best arm leads all others by at least ``min_gap`` and, when
    ``K >= 2``, the best arm differs from the previous segment's, so each
    boundary moves some mean by at least ``min_gap``.
    """
    if num_segments < 1:
        raise ConfigError("num_segments must be >= 1")
    if not 0.0 < min_gap <= 1.0:
        raise ConfigError(f"min_gap must lie in (0, 1], got {min_gap}")
    if num_segments > T:
        raise ConfigError(f"num_segments={num_segments} exceeds T={T}")
    rng = stream(seed, "env", 1)
    bounds = np.sort(rng.choice(np.arange(2, T + 1), size=num_segments - 1, replace=False))
    segments = []
    prev_best = -1
    for start in [1] + bounds.tolist():
        best = int(rng.integers(K))
        if K >= 2 and best == prev_best:
            best = (best + 1 + int(rng.integers(K - 1))) % K
        top = rng.uniform(min_gap, 1.0)
        vec = rng.uniform(0.0, top - min_gap, size=K)
        vec[best] = top
        segments.append((start, vec))
        prev_best = best
    return segments_model(T, segments, noise, width)


def _fold(x):
    # reflect onto [0, 1]; continuous and 1-Lipschitz
    y = np.mod(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


def _variation(means):
    if means.shape[0] < 2:
        return 0.0
    return float(np.abs(np.diff(means, axis=0)).max(axis=1).sum())


def gen_drifting(seed: int, T: int, K: int, tv_budget: float, noise="bernoulli", width=0.25) -> RewardModel:
    """Reflected Gaussian random walks whose total variation equals ``tv_budget``.

    The step scale is solved by root finding so the realized variation of the
    folded paths matches the budget to ~1e-9 relative error.
    """
    if tv_budget < 0:
        raise ConfigError("tv_budget must be non-negative")
    rng = stream(seed, "env", 2)
    start = rng.uniform(0.0, 1.0, size=K)
    steps = rng.normal(size=(T - 1, K))
    walk = np.vstack([np.zeros((1, K)), np.cumsum(steps, axis=0)])
    if tv_budget == 0 or T < 2:
        if tv_budget > 0:
            raise ConfigError("a positive budget needs T >= 2")
        return RewardModel(np.tile(start, (T, 1)), noise, width)

    def excess(scale):
        return _variation(_fold(start + scale * walk)) - tv_budget

    hi = tv_budget / max(_variation(walk), 1e-12)
    for _ in range(60):
        if excess(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ConfigError(f"tv_budget={tv_budget} is not reachable with T={T}")
    scale = brentq(excess, 0.0, hi, xtol=1e-15, rtol=1e-13, maxiter=500)
    return RewardModel(_fold(start + scale * walk), noise, width)


@dataclass
class EnvSpec:
    """Serializable recipe for a :class:`RewardModel`.

    ``params`` by kind:

    * ``piecewise``: either ``segments`` (list of ``{"start": int}`` or
      ``{"start_frac": float}`` plus ``"means"``) or ``num_segments`` and
      ``min_gap`` for a random draw.
    * ``drifting``: ``tv_budget``.
    * ``custom``: ``means`` (nested list, ``T`` rows).
    """

    kind: str
    T: int
    K: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    noise: Any = "bernoulli"
    noise_width: float = 0.25

    _FIELDS = ("kind", "T", "K", "seed", "params", "noise", "noise_width")

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ConfigError(f"kind must be one of {ENV_KINDS}, got {self.kind!r}")
        if int(self.T) < 1 or int(self.K) < 1:
            raise ConfigError("T and K must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "EnvSpec":
        unknown = set(data) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"unknown EnvSpec fields: {sorted(unknown)}")
        missing = {"kind", "T", "K"} - set(data)
        if missing:
            raise ConfigError(f"missing EnvSpec fields: {sorted(missing)}")
        return cls(**{k: data[k] for k in cls._FIELDS if k in data})

    @classmethod
    def from_json(cls, text: str) -> "EnvSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self._FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def with_horizon(self, T: int) -> "EnvSpec":
        d = self.to_dict()
        d["T"] = int(T)
        return EnvSpec.from_dict(d)

    def expand(self) -> RewardModel:
        T, K, p = int(self.T), int(self.K), self.params
        kw = {"noise": self.noise, "width": float(self.noise_width)}
        if self.kind == "piecewise":
            if "segments" in p:
                segments = []
                for seg in p["segments"]:
                    if "start" in seg:
                        start = int(seg["start"])
                    elif "start_frac" in seg:
                        start = 1 + int(round(float(seg["start_frac"]) * T))
                    else:
                        raise ConfigError("each segment needs 'start' or 'start_frac'")
                    if len(seg["means"]) != K:
                        raise ConfigError(f"segment means must have K={K} entries")
                    segments.append((start, seg["means"]))
                return segments_model(T, segments, **kw)
            try:
                n, gap = int(p["num_segments"]), float(p["min_gap"])
            except KeyError as exc:
                raise ConfigError(f"piecewise params missing {exc.args[0]!r}") from None
            return gen_piecewise(self.seed, T, K, n, gap, **kw)
        if self.kind == "drifting":
            if "tv_budget" not in p:
                raise ConfigError("drifting params missing 'tv_budget'")
            return gen_drifting(self.seed, T, K, float(p["tv_budget"]), **kw)
        means = np.asarray(p.get("means"), dtype=float)
        if means.shape != (T, K):
            raise ConfigError(f"custom means must have shape ({T}, {K}), got {means.shape}")
        return gen_custom(means, **kw)
