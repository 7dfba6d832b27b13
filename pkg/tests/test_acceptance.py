"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -v -s
tests/test_acceptance.py`` to see them) and then asserts.  Criterion 1
exercises the real CLI on the full bundled experiment; expect the whole
module to take a few minutes.
"""

import numpy as np
from dataclasses import replace

from diffkf.cli import EXIT_OK, main
from diffkf.excitation import (
    excitation_level_network,
    excitation_level_single,
    trace_bound_report,
)
from diffkf.harness import (
    ExperimentConfig,
    export_csv,
    fig1_config,
    reference_run,
    run_monte_carlo,
)
from diffkf.signals import RegressorGenerator, stream
from diffkf.verify import (
    suite_error_recursions,
    suite_fusion_gap,
    suite_inversion_identity,
    suite_product_bound,
    suite_sandwich,
)


def report(criterion: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def read_errors_csv(path):
    """-> {(mode, sensor): {k: mse}}"""
    table = {}
    for line in path.read_text().splitlines()[1:]:
        mode, sensor, k, mse, _ = line.split(",")
        table.setdefault((mode, int(sensor)), {})[int(k)] = float(mse)
    return table


class TestCriterion1Fig1:
    def test_fig1_qualitative_reproduction(self, tmp_path):
        out = tmp_path / "fig1"
        assert main(["reproduce-fig1", "--out", str(out)]) == EXIT_OK
        table = read_errors_csv(out / "errors.csv")
        sensors = (1, 2, 3)
        tail_ks = [1500, 1600, 1700, 1800, 1900, 2000]

        tail_means = [np.mean([table[("distributed", s)][k] for k in tail_ks]) for s in sensors]
        ok_a = all(np.isfinite(v) and v < 5.0 for v in tail_means)
        report(
            "1a (distributed tail below 5.0)",
            ok_a,
            "mean MSE over k in [1500, 2000]: "
            + ", ".join(f"sensor {s}: {v:.3f}" for s, v in zip(sensors, tail_means)),
        )

        ratios = [
            table[("noncooperative", s)][2000] / table[("distributed", s)][2000]
            for s in sensors
        ]
        ok_b = all(r >= 3.0 for r in ratios)
        report(
            "1b (non-cooperative at least 3x worse at k=2000)",
            ok_b,
            ", ".join(f"sensor {s}: {r:.1f}x" for s, r in zip(sensors, ratios)),
        )

        pairs = [(table[("distributed", s)][100], table[("distributed", s)][2000]) for s in sensors]
        ok_c = all(late < early for early, late in pairs)
        report(
            "1c (distributed MSE at k=2000 below k=100)",
            ok_c,
            ", ".join(
                f"sensor {s}: {early:.3f} -> {late:.3f}"
                for s, (early, late) in zip(sensors, pairs)
            ),
        )
        assert ok_a and ok_b and ok_c


def random_identity_config(rng: np.random.Generator) -> ExperimentConfig:
    """Well-posed random configuration on the identity graph.

    Full-rank input and output maps keep every covariance well
    conditioned, so the combine's extra inversion pair stays far below
    the 1e-12 trajectory-difference budget.
    """

    def conditioned(lo, hi, m):
        q1, _ = np.linalg.qr(rng.standard_normal((m, m)))
        q2, _ = np.linalg.qr(rng.standard_normal((m, m)))
        return q1 @ np.diag(rng.uniform(lo, hi, m)) @ q2.T

    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 5))
    A = np.zeros((n, m, m))
    B = np.zeros((n, m, m))
    C = np.zeros((n, m, m))
    for i in range(n):
        G = rng.standard_normal((m, m))
        A[i] = 0.5 * G / max(np.linalg.norm(G, 2), 1e-9)
        B[i] = conditioned(0.7, 1.3, m)
        C[i] = conditioned(0.5, 1.5, m)
    return ExperimentConfig(
        n=n, m=m, p=m,
        adjacency=np.eye(n),
        A=A,
        B=B,
        C=C,
        x0=np.ones((n, m)),
        xi_cov=np.tile(np.eye(m) * rng.uniform(0.1, 0.4), (n, 1, 1)),
        noise_var=rng.uniform(0.05, 0.3, n),
        noise_kind="gaussian",
        theta0=rng.normal(0, 1, m),
        delta_cov=0.005 * np.eye(m),
        r=rng.uniform(0.05, 0.5, n),
        Q=np.eye(m) * rng.uniform(0.05, 0.2),
        P0=np.tile(np.eye(m), (n, 1, 1)),
        theta_hat0=np.zeros((n, m)),
        horizon=1000, runs=1, record_stride=100,
        seed=int(rng.integers(0, 2**32)),
        mode="both",
    )


class TestCriterion2Degeneracy:
    def test_identity_graph_degenerates_to_noncooperative(self):
        rng = np.random.default_rng(20240210)
        worst = 0.0
        for _ in range(10):
            config = random_identity_config(rng)
            dkf = reference_run(config, 0, distributed=True)
            plain = reference_run(config, 0, distributed=False)
            worst = max(
                worst,
                float(np.abs(dkf.theta_hat - plain.theta_hat).max()),
                float(np.abs(dkf.P - plain.P).max()),
            )
        ok = worst < 1e-12
        report(
            "2 (identity-graph degeneracy)",
            ok,
            f"10 configs, 1000 steps: max |trajectory difference| = {worst:.3e} < 1e-12",
        )
        assert ok


class TestCriterion3MatrixInequalities:
    def test_inequality_suites_at_10k_instances(self):
        rng = np.random.default_rng(31)
        fusion = suite_fusion_gap(10_000, rng)
        ok = report(
            "3 (covariance intersection, 10^4 instances)",
            fusion.ok,
            f"worst relative gap {fusion.worst:.3e} >= -1e-9",
        )
        sandwich = suite_sandwich(10_000, rng)
        ok &= report(
            "3 (combine sandwich inequalities, 10^4 steps)",
            sandwich.ok,
            f"worst relative gap {sandwich.worst:.3e} >= -1e-9",
        )
        inversion = suite_inversion_identity(10_000, rng)
        ok &= report(
            "3 (inversion identity, 10^4 instances)",
            inversion.ok,
            f"worst relative residual {inversion.worst:.3e} < 1e-8",
        )
        assert ok


class TestCriterion4ProductBound:
    def test_product_bound_and_lyapunov_along_100_trajectories(self):
        rng = np.random.default_rng(41)
        result = suite_product_bound(100, rng, steps=200)
        ok = report(
            "4 (product bound + Lyapunov, 100 trajectories x 200 steps)",
            result.ok,
            f"worst relative slack {result.worst:.3e} <= 1e-8",
        )
        assert ok


class TestCriterion5ErrorRecursions:
    def test_error_recursions_on_100_configs(self):
        rng = np.random.default_rng(51)
        result = suite_error_recursions(100, rng, steps=100)
        ok = report(
            "5 (error recursion identity, 100 configs x 100 steps)",
            result.ok,
            f"worst deviation / threshold = {result.worst:.3e} (threshold 1e-8 (1 + max |theta|))",
        )
        assert ok


class TestCriterion6ExcitationSeparation:
    def test_individual_sensors_unexcited_network_excited(self):
        cfg = fig1_config()
        gens = [
            RegressorGenerator(
                cfg.A[i], cfg.B[i], cfg.C[i], cfg.x0[i], cfg.xi_cov[i],
                stream(cfg.seed, 0, 1 + i),
            )
            for i in range(3)
        ]
        rng = np.random.default_rng(61)
        singles_ok = True
        worst_sigma = 0.0
        network_lows = []
        for window in range(8):
            for i, gen in enumerate(gens):
                est = excitation_level_single(gen, h=5, mc=1000, rng=rng)
                singles_ok &= abs(est.value) <= 3 * est.std_error
                if est.std_error > 0:
                    worst_sigma = max(worst_sigma, abs(est.value) / est.std_error)
            net = excitation_level_network(gens, h=5, mc=1000, rng=rng)
            network_lows.append(net.lower_confidence_bound)
            for gen in gens:
                for _ in range(5):
                    gen.advance()
        ok_single = report(
            "6 (single sensors within 3 standard errors of zero)",
            singles_ok,
            f"8 windows x 3 sensors, h=5, mc=1000; worst |value|/se = {worst_sigma:.2f}",
        )
        ok_network = report(
            "6 (network 3-sigma lower bound above 0.005)",
            min(network_lows) > 0.005,
            f"lowest 3-sigma lower confidence bound = {min(network_lows):.4f}",
        )
        assert ok_single and ok_network


class TestCriterion7Boundedness:
    def test_inverse_bound_trace_recursion_and_divergence(self):
        cfg = fig1_config()
        dkf = reference_run(cfg, 0, distributed=True)
        q_inv = np.linalg.norm(np.linalg.inv(cfg.Q), 2)
        worst_ratio = max(
            np.linalg.norm(np.linalg.inv(dkf.P[k, i]), 2) / q_inv
            for k in range(dkf.steps + 1)
            for i in range(dkf.n)
        )
        ok_bound = report(
            "7 (inverse covariance bounded by prior)",
            worst_ratio <= 1 + 1e-10,
            f"max ||P^-1|| / ||Q^-1|| = {worst_ratio:.6f} over 2000 steps",
        )
        tb = trace_bound_report(dkf, h=5)
        ok_trace = report(
            "7 (trace recursion, zero violations)",
            tb.ok,
            f"{len(tb.checks)} block pairs, {len(tb.violations)} violations",
        )
        plain = reference_run(cfg, 0, distributed=False)
        trace_start = np.trace(plain.P[0, 0])
        trace_end = np.trace(plain.P[-1, 0])
        ok_div = report(
            "7 (non-cooperative sensor 1 covariance diverges)",
            trace_end > 10 * trace_start,
            f"Tr(P) grew {trace_start:.1f} -> {trace_end:.1f} (more than 10x)",
        )
        assert ok_bound and ok_trace and ok_div


class TestCriterion8Determinism:
    def test_worker_count_invariance(self, tmp_path):
        cfg = replace(fig1_config(runs=24, horizon=200), record_stride=50)
        csv_1 = export_csv(run_monte_carlo(cfg, workers=1), tmp_path / "w1.csv")
        csv_8 = export_csv(run_monte_carlo(cfg, workers=8), tmp_path / "w8.csv")
        identical = csv_1.read_bytes() == csv_8.read_bytes()
        ok = report(
            "8 (bitwise determinism across worker counts)",
            identical,
            "errors.csv identical for 1 and 8 workers (24 runs, 200 steps)",
        )
        assert ok
