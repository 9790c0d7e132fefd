import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftband import (
    ConfigError,
    EnvSpec,
    RangeError,
    ValidationError,
    constant_model,
    gen_custom,
    gen_drifting,
    gen_piecewise,
    segments_model,
)
from shiftband.rng import stream

from oracles import total_variation


def test_constant_mean_lookup():
    m = constant_model(10, [0.7, 0.3])
    assert m.mean(5, 1) == pytest.approx(0.3)
    assert m.horizon == 10 and m.num_arms == 2


def test_boundary_round_belongs_to_new_segment():
    m = segments_model(100, [(1, [0.9, 0.1]), (50, [0.1, 0.9])])
    assert m.mean(49, 0) == pytest.approx(0.9)
    assert m.mean(50, 0) == pytest.approx(0.1)
    assert m.mean(50, 1) == pytest.approx(0.9)


@pytest.mark.parametrize("t,a", [(0, 0), (11, 0), (1, 2), (1, -1)])
def test_out_of_range_lookup(t, a):
    with pytest.raises(RangeError):
        constant_model(10, [0.5, 0.5]).mean(t, a)


def test_range_error_is_index_error():
    with pytest.raises(IndexError):
        constant_model(3, [0.5]).mean(4, 0)


def test_means_outside_unit_interval_rejected():
    with pytest.raises(ValidationError):
        gen_custom([[0.5, 1.2]])
    with pytest.raises(ValidationError):
        gen_custom([[0.5, float("nan")]])


def test_means_are_read_only():
    m = constant_model(3, [0.5, 0.5])
    with pytest.raises(ValueError):
        m.means[0, 0] = 0.1


def test_bernoulli_monte_carlo_mean():
    m = constant_model(1, [0.6])
    rng = stream(0, "noise")
    draws = [m.sample(1, 0, rng) for _ in range(100_000)]
    assert set(draws) <= {0.0, 1.0}
    assert abs(np.mean(draws) - 0.6) <= 0.005


@pytest.mark.parametrize("mu", [0.05, 0.5, 0.9])
def test_uniform_family_keeps_mean_and_support(mu):
    m = constant_model(50_000, [mu], noise="uniform", width=0.25)
    table = m.sample_table(stream(3, "noise"))
    assert table.min() >= 0.0 and table.max() <= 1.0
    assert abs(table.mean() - mu) < 0.005


def test_deterministic_family_returns_mean():
    m = constant_model(4, [0.25, 0.75], noise="deterministic")
    np.testing.assert_array_equal(m.sample_table(stream(0, "noise")), m.means)


def test_mixed_noise_families():
    m = constant_model(5, [0.3, 0.6], noise=("deterministic", "bernoulli"))
    table = m.sample_table(stream(1, "noise"))
    assert np.all(table[:, 0] == 0.3)
    assert set(np.unique(table[:, 1])) <= {0.0, 1.0}


def test_piecewise_two_segments_has_one_large_change():
    m = gen_piecewise(seed=7, T=500, K=2, num_segments=2, min_gap=0.6)
    diffs = np.abs(np.diff(m.means, axis=0)).max(axis=1)
    changed = np.flatnonzero(diffs > 0)
    assert len(changed) == 1
    assert diffs[changed[0]] >= 0.6


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), K=st.integers(2, 5), n=st.integers(1, 6))
def test_piecewise_properties(seed, K, n):
    m = gen_piecewise(seed, 300, K, n, 0.3)
    assert np.count_nonzero(np.any(np.diff(m.means, axis=0) != 0, axis=1)) == n - 1
    best = m.means.max(axis=1, keepdims=True)
    second = np.sort(m.means, axis=1)[:, -2]
    assert np.all(best[:, 0] - second >= 0.3 - 1e-12)


def test_drifting_hits_budget():
    m = gen_drifting(seed=1, T=1000, K=3, tv_budget=3.0)
    v = total_variation(m.means.tolist())
    assert 2.97 <= v <= 3.03
    assert m.means.min() >= 0 and m.means.max() <= 1


def test_drifting_zero_budget_is_constant():
    m = gen_drifting(seed=1, T=20, K=2, tv_budget=0.0)
    assert np.all(m.means == m.means[0])


def test_generators_deterministic():
    a = gen_piecewise(5, 200, 3, 4, 0.2)
    b = gen_piecewise(5, 200, 3, 4, 0.2)
    assert a.digest() == b.digest()
    assert gen_piecewise(6, 200, 3, 4, 0.2).digest() != a.digest()
    assert gen_drifting(2, 100, 2, 1.0).digest() == gen_drifting(2, 100, 2, 1.0).digest()


def test_sample_table_deterministic_per_seed():
    m = gen_piecewise(0, 100, 2, 2, 0.5)
    t1 = m.sample_table(stream(9, "noise"))
    t2 = m.sample_table(stream(9, "noise"))
    np.testing.assert_array_equal(t1, t2)


def test_csv_export():
    m = segments_model(3, [(1, [0.5, 0.25]), (3, [0.125, 1.0])])
    lines = m.to_csv().splitlines()
    assert lines[0] == "t,arm_1,arm_2"
    assert lines[1] == "1,0.5000000000,0.2500000000"
    assert lines[3] == "3,0.1250000000,1.0000000000"


def test_envspec_roundtrip_and_expand():
    spec = EnvSpec(kind="piecewise", T=100, K=2,
                   params={"segments": [{"start": 1, "means": [0.8, 0.2]},
                                        {"start_frac": 0.5, "means": [0.2, 0.8]}]})
    again = EnvSpec.from_json(spec.to_json())
    assert again == spec
    m = again.expand()
    assert m.mean(51, 1) == pytest.approx(0.8)
    assert m.mean(50, 1) == pytest.approx(0.2)
    assert spec.with_horizon(200).expand().mean(101, 0) == pytest.approx(0.2)


def test_envspec_rejects_unknown_field():
    with pytest.raises(ConfigError):
        EnvSpec.from_dict({"kind": "custom", "T": 1, "K": 1, "colour": "red"})


def test_envspec_custom_and_drifting():
    spec = EnvSpec.from_dict({"kind": "custom", "T": 2, "K": 2, "params": {"means": [[0.1, 0.2], [0.3, 0.4]]}})
    assert spec.expand().mean(2, 1) == pytest.approx(0.4)
    d = EnvSpec.from_dict({"kind": "drifting", "T": 500, "K": 2, "seed": 3, "params": {"tv_budget": 2.0}})
    assert total_variation(d.expand().means.tolist()) == pytest.approx(2.0, rel=1e-3)
    json.loads(d.to_json())
