"""Randomized property suites for the filter's structural guarantees.

Every suite checks a deterministic matrix inequality or identity that the
algorithm satisfies by construction, on randomly generated instances or
along randomly generated filter trajectories.  A violation beyond the
stated tolerance indicates an implementation bug, not bad luck.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import (
    NetworkFilterState,
    Trajectory,
    block_diag,
    check_error_recursions,
    gain_block,
    simulate,
)
from .excitation import (
    covariance_intersection_gap,
    fusion_sandwich_gaps,
    matrix_inversion_residual,
)
from .graph import AdjacencyMatrix, kron_expand
from .kalman import SensorFilterState
from .signals import NoiseSpec, ParameterProcess, RegressorGenerator, SignalSimulator

__all__ = [
    "SuiteResult",
    "random_balanced_adjacency",
    "random_spd",
    "random_trajectory",
    "suite_fusion_gap",
    "suite_sandwich",
    "suite_inversion_identity",
    "suite_product_bound",
    "suite_error_recursions",
    "run_all",
]

GAP_TOL = 1e-9            # eigenvalue floor, scaled by operand size
INVERSION_TOL = 1e-8      # relative residual of the inversion identity
BOUND_SLACK = 1e-8        # relative slack on product/Lyapunov bounds


@dataclass(frozen=True)
class SuiteResult:
    name: str
    instances: int
    worst: float
    tol: float
    ok: bool

    def summary(self) -> str:
        status = "pass" if self.ok else "FAIL"
        return (
            f"{status}  {self.name}: {self.instances} instances, "
            f"worst {self.worst:.3e} (tolerance {self.tol:.1e})"
        )


def random_balanced_adjacency(rng: np.random.Generator, n: int) -> AdjacencyMatrix:
    """Random balanced strongly connected digraph on n nodes.

    Convex combinations of permutation matrices are doubly stochastic; a
    full cycle with positive weight guarantees strong connectivity.
    """
    if n == 1:
        return AdjacencyMatrix(np.ones((1, 1)))
    cycle = np.roll(np.eye(n), 1, axis=1)
    perm = np.eye(n)[rng.permutation(n)]
    w = rng.uniform(0.1, 1.0, 3)
    w /= w.sum()
    return AdjacencyMatrix(w[0] * np.eye(n) + w[1] * cycle + w[2] * perm)


def random_spd(rng: np.random.Generator, m: int, lo: float = 0.2, hi: float = 3.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return q @ np.diag(rng.uniform(lo, hi, m)) @ q.T


def _random_output_map(rng: np.random.Generator, m: int) -> np.ndarray:
    """Well-conditioned random output map, sometimes made rank deficient."""
    q1, _ = np.linalg.qr(rng.standard_normal((m, m)))
    q2, _ = np.linalg.qr(rng.standard_normal((m, m)))
    C = q1 @ np.diag(rng.uniform(0.5, 1.5, m)) @ q2.T
    if m > 1 and rng.uniform() < 0.3:
        C[rng.integers(m)] = 0.0
    return C


def random_trajectory(
    rng: np.random.Generator,
    n: int | None = None,
    m: int | None = None,
    steps: int = 100,
    distributed: bool = True,
    identity_graph: bool = False,
) -> Trajectory:
    """Run the filter on a randomly drawn, well-posed configuration."""
    n = n if n is not None else int(rng.integers(2, 5))
    m = m if m is not None else int(rng.integers(1, 5))
    p = int(rng.integers(1, 3))
    adj = (
        AdjacencyMatrix(np.eye(n)) if identity_graph else random_balanced_adjacency(rng, n)
    )
    Q = np.eye(m) * rng.uniform(0.05, 0.3)
    children = rng.spawn(n + 2)
    parameter = ParameterProcess(
        theta0=rng.normal(0.0, 1.0, m),
        delta_cov=np.eye(m) * rng.uniform(0.001, 0.05),
        rng=children[0],
    )
    regressors = []
    for i in range(n):
        G = rng.standard_normal((m, m))
        A = 0.6 * G / max(np.linalg.norm(G, 2), 1e-9)
        regressors.append(
            RegressorGenerator(
                A=A,
                B=rng.standard_normal((m, p)),
                C=_random_output_map(rng, m),
                x0=np.ones(m),
                xi_cov=np.eye(p) * rng.uniform(0.1, 0.5),
                rng=children[1 + i],
            )
        )
    noises = [NoiseSpec(variance=float(rng.uniform(0.05, 0.5))) for _ in range(n)]
    signals = SignalSimulator(parameter, regressors, noises, children[n + 1])
    sensors = tuple(
        SensorFilterState(
            theta_hat=np.zeros(m), P=np.eye(m), r=float(rng.uniform(0.05, 0.5)), Q=Q
        )
        for _ in range(n)
    )
    net = NetworkFilterState(k=0, sensors=sensors, adjacency=adj)
    return simulate(net, signals, steps, distributed=distributed)


def suite_fusion_gap(instances: int, rng: np.random.Generator) -> SuiteResult:
    """Covariance-intersection inequality on random graphs and SPD blocks."""
    worst = np.inf
    ok = True
    for _ in range(instances):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 5))
        adj = random_balanced_adjacency(rng, n)
        blocks = np.stack([random_spd(rng, m) for _ in range(n)])
        fused_scale = max(1.0, float(np.abs(blocks).max()))
        gap = covariance_intersection_gap(adj, blocks)
        rel = gap / fused_scale
        worst = min(worst, rel)
        ok = ok and rel >= -GAP_TOL
    return SuiteResult("covariance intersection gap", instances, worst, GAP_TOL, ok)


def suite_sandwich(instances: int, rng: np.random.Generator) -> SuiteResult:
    """Combine-step sandwich inequalities along random filter trajectories."""
    worst = np.inf
    ok = True
    checked = 0
    while checked < instances:
        steps = min(50, instances - checked)
        traj = random_trajectory(rng, steps=steps)
        for k in range(traj.steps):
            scale = max(
                1.0,
                float(np.abs(np.linalg.inv(traj.P[k + 1])).max()),
                float(np.abs(traj.P_bar[k]).max()),
            )
            g1, g2 = fusion_sandwich_gaps(traj.P[k + 1], traj.P_bar[k], traj.adjacency)
            rel = min(g1, g2) / scale
            worst = min(worst, rel)
            ok = ok and rel >= -GAP_TOL
        checked += traj.steps
    return SuiteResult("combine sandwich inequalities", checked, worst, GAP_TOL, ok)


def suite_inversion_identity(instances: int, rng: np.random.Generator) -> SuiteResult:
    """Rank-update inversion identity on random well-conditioned matrices."""
    worst = 0.0
    ok = True
    for _ in range(instances):
        d = int(rng.integers(1, 6))
        s = int(rng.integers(1, 4))
        A = random_spd(rng, d, 0.5, 2.0)
        B = rng.standard_normal((d, s))
        C = random_spd(rng, s, 0.5, 2.0)
        D = rng.standard_normal((s, d))
        residual = matrix_inversion_residual(A, B, C, D)
        worst = max(worst, residual)
        ok = ok and residual < INVERSION_TOL
    return SuiteResult("rank-update inversion identity", instances, worst, INVERSION_TOL, ok)


def _step_blocks(traj: Trajectory, k: int):
    """Network-level transition, rate factor, and noise shaping at step k."""
    n, m = traj.n, traj.m
    kron_T = kron_expand(traj.adjacency, m).T
    L_blk = gain_block(traj.gain[k])
    Phi_blk = gain_block(traj.phi[k])
    A_k = L_blk @ Phi_blk.T
    R = np.kron(np.diag(traj.r), np.eye(m))
    Q_k = R @ L_blk @ L_blk.T + block_diag(np.stack([traj.Q] * n))
    P_bar = block_diag(traj.P_bar[k])
    transition = (
        block_diag(traj.P[k + 1]) @ kron_T @ np.linalg.inv(P_bar) @ (np.eye(n * m) - A_k)
    )
    rate = 1.0 - 1.0 / (1.0 + np.linalg.norm(np.linalg.inv(Q_k) @ P_bar, 2))
    return transition, rate


def suite_product_bound(trajectories: int, rng: np.random.Generator, steps: int = 200) -> SuiteResult:
    """Transition-product norm bound and Lyapunov decay along trajectories.

    The quadratic form x' P^-1 x must contract at the per-step rate factor
    1 - 1 / (1 + ||Q_k^-1 P_bar||) at every step, and the squared norm of
    the product of the error-propagation transitions over a sampled window
    [s, t] is dominated by the product of the rate factors times
    ||P_t|| ||P_s^-1||.
    """
    worst = -np.inf
    ok = True
    for _ in range(trajectories):
        traj = random_trajectory(rng, steps=steps)
        n, m = traj.n, traj.m
        s = int(rng.integers(0, steps // 2))
        t = int(rng.integers(s + 1, steps + 1))
        product = np.eye(n * m)
        rate_product = 1.0
        x = rng.standard_normal(n * m)
        x /= np.linalg.norm(x)
        V = x @ np.linalg.inv(block_diag(traj.P[0])) @ x
        for k in range(steps):
            transition, rate = _step_blocks(traj, k)
            x = transition @ x
            V_next = x @ np.linalg.inv(block_diag(traj.P[k + 1])) @ x
            lyap_gap = (V_next - rate * V) / max(1.0, abs(rate * V))
            worst = max(worst, lyap_gap)
            ok = ok and lyap_gap <= BOUND_SLACK
            V = V_next
            if s <= k < t:
                product = transition @ product
                rate_product *= rate
        lhs = np.linalg.norm(product, 2) ** 2
        rhs = (
            rate_product
            * np.linalg.norm(block_diag(traj.P[t]), 2)
            * np.linalg.norm(np.linalg.inv(block_diag(traj.P[s])), 2)
        )
        bound_gap = (lhs - rhs) / max(1.0, abs(rhs))
        worst = max(worst, bound_gap)
        ok = ok and bound_gap <= BOUND_SLACK
    return SuiteResult(
        "transition product bound + Lyapunov decay", trajectories, worst, BOUND_SLACK, ok
    )


def suite_error_recursions(instances: int, rng: np.random.Generator, steps: int = 100) -> SuiteResult:
    """Recursion-propagated errors match direct subtraction on random runs."""
    worst = 0.0
    ok = True
    for _ in range(instances):
        traj = random_trajectory(rng, steps=steps)
        report = check_error_recursions(traj)
        ratio = report.max_dev / report.threshold
        worst = max(worst, ratio)
        ok = ok and report.ok
    return SuiteResult(
        "error recursion identities (dev / threshold)", instances, worst, 1.0, ok
    )


def run_all(instances: int = 1000, seed: int = 0) -> list[SuiteResult]:
    """Run every suite; trajectory-based suites scale their counts down."""
    rng = np.random.default_rng(seed)
    trajectories = max(2, min(100, instances // 100))
    configs = max(2, min(100, instances // 100))
    return [
        suite_fusion_gap(instances, rng),
        suite_sandwich(instances, rng),
        suite_inversion_identity(instances, rng),
        suite_product_bound(trajectories, rng),
        suite_error_recursions(configs, rng),
    ]
