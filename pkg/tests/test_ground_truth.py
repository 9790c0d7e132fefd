import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftband import (
    PhaseAnnotation,
    ResourceLimitError,
    compute_significant_shifts,
    compute_total_variation,
    count_best_arm_switches,
    gen_piecewise,
    segments_model,
    significant_regret_trigger,
    theoretical_bounds,
)
from shiftband.env import constant_model

from oracles import brute_force_shifts, total_variation


def test_worse_arm_triggers_on_second_round():
    # gap 0.8 per round: [1, 2] sums to 1.6 >= sqrt(2)
    m = constant_model(10, [0.9, 0.1])
    assert significant_regret_trigger(m, 1, 1) == 2
    assert significant_regret_trigger(m, 1, 0) is None


def test_stationary_has_no_shift():
    ann = compute_significant_shifts(constant_model(100, [0.7, 0.3]))
    assert ann.tau == [1, 101]
    assert ann.num_shifts == 0
    assert ann.last_safe_arm == [0]


def test_single_flip():
    m = segments_model(100, [(1, [0.9, 0.1]), (51, [0.1, 0.9])])
    ann = compute_significant_shifts(m)
    assert ann.num_shifts == 1
    assert ann.tau[1] > 51
    # arm 0 loses 0.8 per round from 51: [51, 52] already sums to 1.6
    assert ann.tau == [1, 52, 101]
    assert ann.last_safe_arm[0] == 0


def test_safe_sets():
    m = segments_model(100, [(1, [0.9, 0.1]), (51, [0.1, 0.9])])
    ann = compute_significant_shifts(m)
    assert ann.safe_set(1) == [0, 1]
    assert ann.safe_set(2) == [0]
    assert ann.safe_set(51) == [0]
    assert ann.safe_set(52) == [0, 1]
    assert ann.safe_set(53) == [1]
    assert [list(s) for s in ann.safe_sets()] == [ann.safe_set(t) for t in range(1, 101)]


def test_variation_and_switch_counts():
    m = segments_model(10, [(1, [0.9, 0.1]), (6, [0.1, 0.9])])
    assert compute_total_variation(m) == pytest.approx(0.8)
    assert count_best_arm_switches(m) == 1


def test_alternating_flips_switch_count():
    segs = [(1 + 10 * i, [0.9, 0.1] if i % 2 == 0 else [0.1, 0.9]) for i in range(10)]
    m = segments_model(100, segs)
    assert count_best_arm_switches(m) == 9


def test_cap_enforced():
    with pytest.raises(ResourceLimitError):
        compute_significant_shifts(constant_model(50, [0.5, 0.5]), cap=49)


def test_bounds_stationary():
    ann = compute_significant_shifts(constant_model(100, [0.6, 0.4]))
    b = theoretical_bounds(ann)
    assert b.sum_sqrt == pytest.approx(math.sqrt(200))
    assert b.jensen_bound == pytest.approx(math.sqrt(200))
    assert b.tv_bound == pytest.approx(math.sqrt(200))


def test_annotation_roundtrip():
    ann = compute_significant_shifts(gen_piecewise(2, 150, 3, 3, 0.4))
    again = PhaseAnnotation.from_dict(ann.to_dict())
    assert again.tau == ann.tau and again.triggers == ann.triggers
    assert again.safe_sets() == ann.safe_sets()


def _random_means(draw_seed, T, K, n_changes):
    rng = np.random.default_rng(draw_seed)
    starts = sorted(set(rng.integers(2, T + 1, size=n_changes).tolist()))
    segs = [(1, rng.uniform(0, 1, K))] + [(s, rng.uniform(0, 1, K)) for s in starts]
    return segments_model(T, segs)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(2, 120), K=st.integers(2, 4), n=st.integers(0, 5))
def test_matches_brute_force(seed, T, K, n):
    m = _random_means(seed, T, K, n)
    ann = compute_significant_shifts(m)
    taus, safe, trig = brute_force_shifts(m.means.tolist())
    assert ann.tau == taus
    assert ann.last_safe_arm == safe
    assert ann.triggers == trig


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(2, 150), K=st.integers(2, 4), n=st.integers(0, 6))
def test_structural_properties(seed, T, K, n):
    m = _random_means(seed, T, K, n)
    ann = compute_significant_shifts(m)
    L = ann.num_shifts
    changes = ann.num_changes
    # a trigger on [s1, s2] needs s2 - s1 + 1 >= sqrt(K (s2 - s1))
    for length in ann.phase_lengths()[:-1]:
        assert length >= K / 4
    assert L <= ann.best_arm_switches <= changes
    assert ann.total_variation == pytest.approx(total_variation(m.means.tolist()))
    # safe sets shrink within a phase and reset at each shift
    sets = ann.safe_sets()
    starts = set(ann.tau[:-1])
    for t in range(2, T + 1):
        if t in starts:
            assert sets[t - 1] == tuple(range(K))
        else:
            assert set(sets[t - 1]) <= set(sets[t - 2])
        assert ann.last_safe_at(t) in sets[t - 1]
    b = theoretical_bounds(ann)
    assert b.sum_sqrt <= b.jensen_bound * (1 + 1e-12)
    assert b.sum_sqrt <= b.tv_bound * (1 + 1e-12)
