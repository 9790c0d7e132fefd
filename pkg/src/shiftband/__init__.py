"""Adaptive restarts for multi-armed bandits under significant distribution shifts."""

from .baselines import OraclePolicy, SetSequencePolicy, UniformPolicy, safe_singleton_sets
from .env import EnvSpec, RewardModel, constant_model, gen_custom, gen_drifting, gen_piecewise, segments_model
from .errors import (
    ConfigError,
    HorizonExhausted,
    NumericError,
    ProtocolError,
    RangeError,
    ResourceLimitError,
    ShiftbandError,
    ValidationError,
)
from .ground_truth import (
    PhaseAnnotation,
    compute_significant_shifts,
    compute_total_variation,
    count_best_arm_switches,
    significant_regret_trigger,
    theoretical_bounds,
)
from .harness import ExperimentConfig, RegretTrace, diagnostics_e1, fit_scaling_exponent, run_experiment, run_trial
from .kernels import BACKEND as KERNEL_BACKEND
from .meta import DoublingMeta, EvictionConfig, MetaPolicy, ReplaySchedule, eviction_trigger, gap_estimate_sum

__version__ = "0.1.0"
