#!/usr/bin/env python3
"""Benchmark the hot simulation kernel: numba-compiled vs plain numpy.

Runs the bundled three-sensor experiment's single-run kernel on both
paths, reports per-run wall time and the maximum absolute disagreement.
Invoke from the repository root:

    python benchmarks/bench_kernels.py [--runs 20] [--horizon 2000]

With DIFFKF_DISABLE_NUMBA=1 (or numba missing) only the numpy path is
timed.
"""

import argparse
import time

import numpy as np

from diffkf._accel import NUMBA_ENABLED
from diffkf.harness import fig1_config, prepare_run_noise
from diffkf import kernels


def kernel_args(config, run_index):
    delta_seq, xi_seq, v_seq = prepare_run_noise(config, run_index)
    ks = config.record_ks()
    record_at = np.full(config.horizon + 1, -1, dtype=np.int64)
    record_at[ks] = np.arange(ks.size)
    return (
        True,
        config.adjacency, config.A, config.B, config.C,
        config.x0, config.theta0, config.theta_hat0, config.P0,
        config.Q, config.r,
        delta_seq, xi_seq, v_seq,
        record_at, ks.size,
    )


def time_path(fn, arg_sets):
    start = time.perf_counter()
    outputs = [fn(*args)[0] for args in arg_sets]
    elapsed = time.perf_counter() - start
    return elapsed / len(arg_sets), outputs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--horizon", type=int, default=2000)
    args = parser.parse_args()

    config = fig1_config(runs=args.runs, horizon=args.horizon)
    arg_sets = [kernel_args(config, r) for r in range(args.runs)]

    if NUMBA_ENABLED:
        compiled = kernels.simulate_run
        interpreted = kernels.simulate_run.py_func
        t0 = time.perf_counter()
        compiled(*arg_sets[0])
        print(f"compile + first call: {time.perf_counter() - t0:.2f} s")
        t_compiled, out_c = time_path(compiled, arg_sets)
        t_interp, out_i = time_path(interpreted, arg_sets)
        diff = max(float(np.abs(a - b).max()) for a, b in zip(out_c, out_i))
        print(f"numba kernel : {t_compiled * 1e3:8.2f} ms / run")
        print(f"numpy kernel : {t_interp * 1e3:8.2f} ms / run")
        print(f"speedup      : {t_interp / t_compiled:8.1f} x")
        print(f"max |diff|   : {diff:.3e}")
    else:
        print("numba disabled or unavailable; timing the numpy path only")
        t_interp, _ = time_path(kernels.simulate_run, arg_sets)
        print(f"numpy kernel : {t_interp * 1e3:8.2f} ms / run")


if __name__ == "__main__":
    main()
