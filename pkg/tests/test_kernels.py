import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftband import _kernels_py as py
from shiftband import kernels

compiled = pytest.importorskip("shiftband._kernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(2, 300), K=st.integers(1, 5), start=st.integers(1, 50))
def test_first_trigger_agrees(seed, T, K, start):
    rng = np.random.default_rng(seed)
    gap = np.zeros(T + 1)
    gap[1:] = rng.uniform(0, 1, T) * (rng.uniform(0, 1, T) < 0.4)
    start = min(start, T)
    assert compiled.first_trigger(gap, start, K, 1e-9) == py.first_trigger(gap, start, K, 1e-9)


def _prefix(seed, T, K):
    rng = np.random.default_rng(seed)
    inc = np.zeros((T + 1, K))
    arms = rng.integers(0, K, T)
    inc[np.arange(1, T + 1), arms] = K * rng.uniform(0, 1, T) * rng.uniform(0.5, 1.5, K)[arms]
    return np.ascontiguousarray(np.cumsum(inc, axis=0))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(3, 300), K=st.integers(2, 5), lo=st.integers(1, 40),
       scale=st.floats(0.5, 5.0))
def test_scans_agree(seed, T, K, lo, scale):
    P = _prefix(seed, T, K)
    lo = min(lo, T - 2)
    thr = np.ascontiguousarray(scale * np.sqrt(np.maximum(K * np.arange(T + 1.0), K * K)))
    starts = np.array(sorted({lo, lo + (T - lo) // 3}), dtype=np.int64)
    for s2 in range(lo + 1, T + 1):
        for kind in ("range", "dyadic"):
            a = np.full(K, -1, dtype=np.int64)
            b = np.full(K, -1, dtype=np.int64)
            if kind == "range":
                compiled.scan_range(P, s2, lo, thr, a)
                py.scan_range(P, s2, lo, thr, b)
            else:
                compiled.scan_dyadic(P, s2, lo, starts, thr, a)
                py.scan_dyadic(P, s2, lo, starts, thr, b)
            np.testing.assert_array_equal(a, b)


def test_scan_range_matches_direct_loop():
    T, K = 120, 3
    P = _prefix(4, T, K)
    thr = np.ascontiguousarray(1.5 * np.sqrt(np.maximum(K * np.arange(T + 1.0), K * K)))
    latest = np.full(K, -1, dtype=np.int64)
    expect = [-1] * K
    for s2 in range(2, T + 1):
        compiled.scan_range(P, s2, 1, thr, latest)
        for a in range(K):
            for s1 in range(1, s2):
                for b in range(K):
                    d = (P[s2, b] - P[s1 - 1, b]) - (P[s2, a] - P[s1 - 1, a])
                    if d > thr[s2 - s1]:
                        expect[a] = max(expect[a], s1)
        assert latest.tolist() == expect


@pytest.mark.parametrize("mode", ["exact", "dyadic"])
def test_meta_trajectory_identical_across_backends(mode, monkeypatch):
    from shiftband import EvictionConfig, MetaPolicy, gen_piecewise, run_trial

    model = gen_piecewise(3, 1500, 3, 3, 0.6)
    cfg = EvictionConfig(C0=0.25, scan_mode=mode)
    monkeypatch.setattr(kernels, "scan_range", compiled.scan_range)
    monkeypatch.setattr(kernels, "scan_dyadic", compiled.scan_dyadic)
    a = run_trial(model, MetaPolicy(3, 1500, cfg, seed=1), seed=1)
    monkeypatch.setattr(kernels, "scan_range", py.scan_range)
    monkeypatch.setattr(kernels, "scan_dyadic", py.scan_dyadic)
    b = run_trial(model, MetaPolicy(3, 1500, cfg, seed=1), seed=1)
    assert any(e.type.startswith("evict") for e in a.events)
    assert a.events == b.events
    np.testing.assert_array_equal(a.arms, b.arms)
