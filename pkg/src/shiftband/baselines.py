"""Reference policies that know the ground truth, plus a uniform control."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .env import RewardModel
from .errors import HorizonExhausted, ProtocolError, ValidationError
from .ground_truth import PhaseAnnotation
from .rng import UniformTape, stream


class _UniformOverSets:
    """Plays uniformly from ``arms_at(t)``; enforces select/observe alternation."""

    name = "base"

    def __init__(self, T: int | None, rng: np.random.Generator):
        self.T = T
        self.t = 1
        self._tape = UniformTape(rng)
        self._pending: int | None = None

    def arms_at(self, t: int) -> Sequence[int]:
        raise NotImplementedError

    def select(self) -> int:
        if self._pending is not None:
            raise ProtocolError("select called twice without observe")
        if self.T is not None and self.t > self.T:
            raise HorizonExhausted(f"horizon {self.T} exhausted")
        arms = self.arms_at(self.t)
        self._pending = arms[int(self._tape.next() * len(arms))]
        return self._pending

    def observe(self, arm: int, reward: float):
        if self._pending is None:
            raise ProtocolError("observe called without a preceding select")
        if arm != self._pending:
            raise ProtocolError(f"observed arm {arm} but selected {self._pending}")
        if not 0.0 <= reward <= 1.0:
            raise ValidationError(f"reward {reward} outside [0, 1]")
        self._pending = None
        self.t += 1


class UniformPolicy(_UniformOverSets):
    name = "uniform"

    def __init__(self, K: int, T: int | None = None, seed: int = 0, rng=None):
        super().__init__(T, rng if rng is not None else stream(seed, "select"))
        self._arms = tuple(range(K))

    def arms_at(self, t):
        return self._arms


class OraclePolicy(_UniformOverSets):
    """Uniform over the safe set of the current phase."""

    name = "oracle"

    def __init__(self, annotation: PhaseAnnotation, seed: int = 0, rng=None, model: RewardModel | None = None):
        if model is not None:
            check_annotation(annotation, model)
        super().__init__(annotation.T, rng if rng is not None else stream(seed, "select"))
        self.annotation = annotation
        self._sets = annotation.safe_sets()

    def arms_at(self, t):
        return self._sets[t - 1]


class SetSequencePolicy(_UniformOverSets):
    """Uniform over a fixed, validated sequence of arm sets."""

    name = "set-sequence"

    def __init__(self, sets: Sequence[Sequence[int]], annotation: PhaseAnnotation, seed: int = 0, rng=None):
        self.sets = [tuple(sorted(s)) for s in sets]
        validate_set_sequence(self.sets, annotation)
        super().__init__(annotation.T, rng if rng is not None else stream(seed, "select"))

    def arms_at(self, t):
        return self.sets[t - 1]


def check_annotation(annotation: PhaseAnnotation, model: RewardModel):
    if annotation.model_hash is not None and annotation.model_hash != model.digest():
        raise ProtocolError("phase annotation was computed for a different environment")
    if (annotation.T, annotation.K) != (model.horizon, model.num_arms):
        raise ProtocolError("phase annotation shape does not match the environment")


def validate_set_sequence(sets: Sequence[Sequence[int]], annotation: PhaseAnnotation):
    if len(sets) != annotation.T:
        raise ValidationError(f"need {annotation.T} sets, got {len(sets)}")
    for t, s in enumerate(sets, start=1):
        if not s:
            raise ValidationError(f"set at round {t} is empty")
        if not set(s) <= set(annotation.safe_set(t)):
            raise ValidationError(f"set at round {t} contains arms that are no longer safe")
        if t > 1 and annotation.phase_of(t) == annotation.phase_of(t - 1) and not set(s) <= set(sets[t - 2]):
            raise ValidationError(f"set grows at round {t} inside a phase")


def safe_singleton_sets(annotation: PhaseAnnotation) -> list[tuple[int]]:
    """``{last safe arm of t's phase}`` for every round ``t``."""
    out = []
    for i, (a, b) in enumerate(zip(annotation.tau, annotation.tau[1:])):
        out.extend([(annotation.last_safe_arm[i],)] * (b - a))
    return out
