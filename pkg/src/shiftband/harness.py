"""Seeded trials, experiment grids and regret aggregation.

Regret increments are computed from the true means: the increment at round
``t`` is ``max_a mu_t(a) - mu_t(pi_t)``.  Averaging over seeds estimates the
expected dynamic regret.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Sequence

import jsonschema
import numpy as np

from .baselines import OraclePolicy, SetSequencePolicy, UniformPolicy, check_annotation, safe_singleton_sets
from .env import EnvSpec, RewardModel
from .errors import ConfigError, NumericError, ProtocolError
from .ground_truth import DEFAULT_CAP, PhaseAnnotation, compute_significant_shifts, theoretical_bounds
from .meta import DoublingMeta, EvictionConfig, MetaPolicy
from .rng import stream

POLICY_NAMES = ("meta", "meta-doubling", "oracle", "safe-singleton", "uniform")
RESERVED_POLICY_NAMES = ("exp3s", "sw-ucb", "adswitch")
SEED_OFFSET_ENV = "SHIFTBAND_SEED_OFFSET"


@dataclass
class RegretTrace:
    increments: np.ndarray
    arms: np.ndarray
    events: list = field(default_factory=list)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments)

    @property
    def final_regret(self) -> float:
        return float(self.increments.sum())

    def __len__(self):
        return len(self.increments)

    def restart_rounds(self) -> list[int]:
        return [e.round for e in self.events if e.type == "restart"]

    def replay_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for e in self.events:
            if e.type == "replay_start":
                counts[e.payload["duration"]] = counts.get(e.payload["duration"], 0) + 1
        return counts


def run_trial(model: RewardModel, policy, seed: int, T: int | None = None,
              rewards: np.ndarray | None = None) -> RegretTrace:
    """Drive ``policy`` for ``T`` rounds on ``model``.

    Reward noise comes from the ``noise`` stream of ``seed`` (all cells drawn
    up front) unless an explicit ``rewards`` table is given.
    """
    T = model.horizon if T is None else T
    if T > model.horizon:
        raise ConfigError(f"environment horizon {model.horizon} is shorter than T={T}")
    if rewards is None:
        rewards = model.sample_table(stream(seed, "noise"))
    table = rewards[:T].tolist()
    chosen = []
    select, observe = policy.select, policy.observe
    for row in table:
        a = select()
        observe(a, row[a])
        chosen.append(a)
    arms = np.asarray(chosen, dtype=np.int64)
    gaps = model.gaps()
    increments = gaps[np.arange(T), arms]
    return RegretTrace(increments=increments, arms=arms, events=list(getattr(policy, "events", [])))


def make_policy(name: str, model: RewardModel, T: int, seed: int,
                annotation: PhaseAnnotation | None = None, params: dict | None = None):
    params = dict(params or {})
    K = model.num_arms
    if name in RESERVED_POLICY_NAMES:
        raise ConfigError(f"policy {name!r} is reserved but not implemented")
    if name not in POLICY_NAMES:
        raise ConfigError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
    if name == "uniform":
        return UniformPolicy(K, T, rng=stream(seed, "select"))
    if name in ("meta", "meta-doubling"):
        cfg = EvictionConfig(**params)
        if name == "meta":
            return MetaPolicy(K, T, cfg, select_rng=stream(seed, "select"), schedule_rng=stream(seed, "schedule"))
        return DoublingMeta(K, cfg, seed=seed)
    if annotation is None:
        raise ProtocolError(f"policy {name!r} needs a phase annotation")
    check_annotation(annotation, model)
    if name == "oracle":
        return OraclePolicy(annotation, rng=stream(seed, "select"))
    return SetSequencePolicy(safe_singleton_sets(annotation), annotation, rng=stream(seed, "select"))


# -- configuration ------------------------------------------------------------


def load_schema(name: str = "experiment.schema.json") -> dict:
    return json.loads(resources.files("shiftband").joinpath("schema").joinpath(name).read_text())


def _schema_error(exc: jsonschema.ValidationError) -> ConfigError:
    path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
    return ConfigError(f"config error at {path}: {exc.message}")


@dataclass
class ExperimentConfig:
    env: EnvSpec
    policy: dict
    horizons: list[int]
    seeds: list[int]
    output: dict = field(default_factory=dict)
    parallel: int = 1
    curve_points: int = 0

    @classmethod
    def from_dict(cls, data: dict, seed_offset: int | None = None) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, load_schema())
        except jsonschema.ValidationError as exc:
            raise _schema_error(exc) from None
        seeds = data["seeds"]
        seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
        if seed_offset is None:
            seed_offset = int(os.environ.get(SEED_OFFSET_ENV, "0") or 0)
        seeds = [s + seed_offset for s in seeds]
        env = EnvSpec.from_dict(data["env"])
        horizons = [int(h) for h in data.get("horizons", [env.T])]
        policy = dict(data["policy"])
        if policy["name"] in ("meta", "meta-doubling"):
            EvictionConfig(**{k: v for k, v in policy.items() if k != "name"})
        return cls(env=env, policy=policy, horizons=horizons, seeds=seeds,
                   output=dict(data.get("output", {})), parallel=int(data.get("parallel", 1)),
                   curve_points=int(data.get("curve_points", 0)))

    def to_dict(self) -> dict:
        return {
            "env": self.env.to_dict(),
            "policy": dict(self.policy),
            "horizons": list(self.horizons),
            "seeds": list(self.seeds),
            "output": dict(self.output),
            "parallel": self.parallel,
            "curve_points": self.curve_points,
        }

    def cells(self) -> list[tuple[int, int]]:
        return [(T, s) for T in self.horizons for s in self.seeds]


# -- experiment execution -----------------------------------------------------


@dataclass
class TrialRow:
    T: int
    seed: int
    final_regret: float
    num_restarts: int
    num_replays: int
    restart_rounds: list[int]
    replay_counts: dict[int, int]
    curve: list[float] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)


@dataclass
class HorizonSummary:
    T: int
    num_seeds: int
    mean_regret: float
    std_error: float
    restart_fraction: float
    ground_truth: dict[str, Any] | None
    bound_ratio: float | None
    mean_curve: list[float] = field(default_factory=list)


@dataclass
class ExperimentResult:
    config: dict
    rows: list[TrialRow]
    summaries: list[HorizonSummary]
    slope: float | None

    def final_regrets(self, T: int) -> np.ndarray:
        return np.array([r.final_regret for r in self.rows if r.T == T])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "seed", "final_regret", "num_restarts", "num_replays"])
        for r in self.rows:
            w.writerow([r.T, r.seed, f"{r.final_regret:.10f}", r.num_restarts, r.num_replays])
        return buf.getvalue()

    def events_jsonl(self) -> str:
        lines = []
        for r in self.rows:
            for e in r.events:
                lines.append(json.dumps({"T": r.T, "seed": r.seed, **e}, sort_keys=True))
        return "".join(line + "\n" for line in lines)

    def summary_dict(self) -> dict:
        return {
            "config": self.config,
            "slope": self.slope,
            "horizons": [asdict(s) for s in self.summaries],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary_dict(), indent=2, sort_keys=True)


@lru_cache(maxsize=32)
def _prepare(env_json: str, T: int):
    spec = EnvSpec.from_json(env_json).with_horizon(T)
    model = spec.expand()
    annotation = compute_significant_shifts(model) if T <= DEFAULT_CAP else None
    return model, annotation


def _curve(cumulative: np.ndarray, points: int) -> list[float]:
    if points <= 0:
        return []
    idx = np.unique(np.linspace(0, len(cumulative) - 1, points).round().astype(int))
    return [float(cumulative[i]) for i in idx]


def _run_cell(env_json: str, policy: dict, T: int, seed: int, curve_points: int,
              keep_events: bool = False) -> TrialRow:
    model, annotation = _prepare(env_json, T)
    params = {k: v for k, v in policy.items() if k != "name"}
    pol = make_policy(policy["name"], model, T, seed, annotation, params)
    trace = run_trial(model, pol, seed, T)
    counts = trace.replay_counts()
    return TrialRow(
        T=T,
        seed=seed,
        final_regret=trace.final_regret,
        num_restarts=len(trace.restart_rounds()),
        num_replays=sum(counts.values()),
        restart_rounds=trace.restart_rounds(),
        replay_counts=counts,
        curve=_curve(trace.cumulative, curve_points),
        events=[e.to_dict() for e in trace.events] if keep_events else [],
    )


def _run_cell_star(args):
    return _run_cell(*args)


def standard_error(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(v.std(ddof=1) / math.sqrt(v.size))


def run_experiment(config: ExperimentConfig | dict, parallel: int | None = None) -> ExperimentResult:
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    workers = config.parallel if parallel is None else parallel
    env_json = config.env.to_json()
    keep = bool(config.output.get("events"))
    jobs = [(env_json, config.policy, T, s, config.curve_points, keep) for T, s in config.cells()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_run_cell(*job) for job in jobs]
    rows.sort(key=lambda r: (r.T, r.seed))

    summaries = []
    for T in config.horizons:
        cell = [r for r in rows if r.T == T]
        finals = [r.final_regret for r in cell]
        mean = float(np.mean(finals))
        gt = None
        ratio = None
        _, annotation = _prepare(env_json, T)
        if annotation is not None:
            b = theoretical_bounds(annotation)
            gt = {
                "tau": annotation.tau,
                "L": annotation.num_shifts,
                "S": annotation.best_arm_switches,
                "V": annotation.total_variation,
                "num_changes": annotation.num_changes,
                "sum_sqrt": b.sum_sqrt,
                "jensen_bound": b.jensen_bound,
                "tv_bound": b.tv_bound,
            }
            denom = math.log(T) ** 3 * b.sum_sqrt
            ratio = mean / denom if denom > 0 else None
        curve = []
        if config.curve_points > 0:
            curve = np.mean([r.curve for r in cell], axis=0).tolist()
        summaries.append(HorizonSummary(
            T=T,
            num_seeds=len(cell),
            mean_regret=mean,
            std_error=standard_error(finals),
            restart_fraction=float(np.mean([r.num_restarts > 0 for r in cell])),
            ground_truth=gt,
            bound_ratio=ratio,
            mean_curve=curve,
        ))
    slope = None
    hs = sorted(config.horizons)
    if len(hs) >= 3 and hs[-1] >= 8 * hs[0] and all(s.mean_regret > 0 for s in summaries):
        slope = fit_scaling_exponent([(s.T, s.mean_regret) for s in summaries])
    return ExperimentResult(config=config.to_dict(), rows=rows, summaries=summaries, slope=slope)


def fit_scaling_exponent(pairs: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(regret)`` against ``log(T)``."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise ConfigError("need at least three (T, regret) pairs")
    T, r = arr[:, 0], arr[:, 1]
    if np.any(T <= 0) or np.any(r <= 0):
        raise NumericError("horizons and regrets must be positive for a log-log fit")
    if T.max() < 8 * T.min():
        raise ConfigError("horizons must span at least a factor of 8")
    slope, _ = np.polyfit(np.log(T), np.log(r), 1)
    return float(slope)


# -- concentration diagnostic --------------------------------------------------


@dataclass
class E1Report:
    c_values: list[float]
    violation_fraction: list[float]
    num_windows: int
    max_deviation: float


def diagnostics_e1(policy: MetaPolicy, model: RewardModel, num_windows: int = 1000,
                   c_values: Sequence[float] = (0.25, 0.5, 1.0, 2.0, 4.0), seed: int = 0) -> E1Report:
    """Compare importance-weighted gap sums with their conditional means.

    For a random window ``[s1, s2]`` and ordered arm pair ``(a', a)`` the
    deviation is ``|sum (hat_delta - E[hat_delta | past])|`` where the
    conditional mean is ``mu(a') 1{a' in A_t} - mu(a) 1{a in A_t}``.  Returns
    the fraction of windows whose deviation exceeds
    ``c * log(T) * (sqrt(K (s2 - s1)) + K)`` for each ``c``.
    """
    T = len(policy.played_sets)
    K = model.num_arms
    if T < 2 or K < 2:
        return E1Report(list(c_values), [0.0] * len(c_values), 0, 0.0)
    mask = np.zeros((T, K))
    for i, arms in enumerate(policy.played_sets):
        mask[i, list(arms)] = 1.0
    cond = np.zeros((T + 1, K))
    cond[1:] = np.cumsum(model.means[:T] * mask, axis=0)
    P = policy.P
    rng = stream(seed, "select", 0xE1)
    s = np.sort(rng.integers(1, T + 1, size=(num_windows, 2)), axis=1)
    s[:, 1] = np.where(s[:, 0] == s[:, 1], np.minimum(s[:, 1] + 1, T), s[:, 1])
    s[:, 0] = np.where(s[:, 0] == s[:, 1], s[:, 1] - 1, s[:, 0])
    a = rng.integers(0, K, size=num_windows)
    a_prime = (a + rng.integers(1, K, size=num_windows)) % K
    s1, s2 = s[:, 0], s[:, 1]

    def window(M, b):
        return M[s2, b] - M[s1 - 1, b]

    est = window(P, a_prime) - window(P, a)
    mean = window(cond, a_prime) - window(cond, a)
    dev = np.abs(est - mean)
    scale = math.log(policy.T) * (np.sqrt(K * (s2 - s1)) + K)
    fractions = [float(np.mean(dev > c * scale)) for c in c_values]
    return E1Report(list(c_values), fractions, num_windows, float(dev.max()))
