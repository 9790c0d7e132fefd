"""Compiled kernels versus the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on identical inputs, then a full META trial with each
backend (the backend is forced through SHIFTBAND_KERNELS in a subprocess).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from shiftband import _kernels_py as fallback

try:
    from shiftband import _kernels as compiled
except ImportError:
    compiled = None

TRIAL = """
import time
from shiftband import EvictionConfig, MetaPolicy, constant_model, run_trial
m = constant_model({T}, [0.8, 0.2])
t0 = time.perf_counter()
run_trial(m, MetaPolicy(2, {T}, EvictionConfig(scan_mode="{mode}"), seed=0), seed=0)
print(time.perf_counter() - t0)
"""


def inputs(T=4096, K=4, seed=0):
    rng = np.random.default_rng(seed)
    gap = np.zeros(T + 1)
    gap[1:] = 0.02 * rng.random(T)
    inc = np.zeros((T + 1, K))
    inc[np.arange(1, T + 1), rng.integers(0, K, T)] = K * rng.random(T)
    P = np.ascontiguousarray(np.cumsum(inc, axis=0))
    thr = np.ascontiguousarray(50.0 * np.sqrt(np.maximum(K * np.arange(T + 1.0), K * K)))
    starts = np.array([1, T // 3, T // 2], dtype=np.int64)
    return gap, P, thr, starts, K, T


def cases(mod, gap, P, thr, starts, K, T):
    def latest():
        return np.full(K, -1, dtype=np.int64)

    return {
        "first_trigger (T=4096)": lambda: mod.first_trigger(gap, 1, K, 1e-9),
        "scan_range (one round)": lambda: mod.scan_range(P, T, 1, thr, latest()),
        "scan_dyadic (one round)": lambda: mod.scan_dyadic(P, T, 1, starts, thr, latest()),
    }


def trial_seconds(backend, T, mode):
    env = dict(os.environ, SHIFTBAND_KERNELS=backend)
    out = subprocess.run([sys.executable, "-c", TRIAL.format(T=T, mode=mode)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--T", type=int, default=4096, help="horizon for the end-to-end trial")
    args = ap.parse_args()
    if compiled is None:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    data = inputs()
    fb, cy = cases(fallback, *data), cases(compiled, *data)
    print(f"{'kernel':<26}{'numpy (us)':>12}{'cython (us)':>13}{'speedup':>9}")
    for name in fb:
        n = 20
        t_py = min(timeit.repeat(fb[name], number=n, repeat=args.repeat)) / n * 1e6
        t_cy = min(timeit.repeat(cy[name], number=n, repeat=args.repeat)) / n * 1e6
        print(f"{name:<26}{t_py:>12.1f}{t_cy:>13.1f}{t_py / t_cy:>8.1f}x")
    print(f"\nMETA trial, T={args.T}, K=2 (seconds)")
    for mode in ("dyadic", "exact"):
        t_py = trial_seconds("python", args.T, mode)
        t_cy = trial_seconds("", args.T, mode)
        print(f"  {mode:<8} numpy {t_py:7.2f}   cython {t_cy:7.2f}   speedup {t_py / t_cy:5.1f}x")


if __name__ == "__main__":
    main()
