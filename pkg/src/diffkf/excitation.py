"""Excitation diagnostics and matrix-inequality checkers.

The tracking ability of the network rests on how much information the
regressors carry.  The central quantity is the normalized Gram matrix
phi phi' / (1 + ||phi||^2), whose eigenvalues live in [0, 1].  Averaged
over an h-step window (conditionally on the state at the window start)
and over sensors, its smallest eigenvalue measures cooperative
excitation: the network can track even when every individual sensor's
average is singular.

Membership of the excitation sequence in a geometric-decay class is not
decidable from finite data; ``fit_product_decay`` reports a fitted
(scale, rate) pair and flags the absence of empirical decay instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diffusion import Trajectory, block_diag
from .graph import AdjacencyMatrix, diameter, kron_expand, min_hop_weight
from .signals import RegressorGenerator

__all__ = [
    "ExcitationEstimate",
    "ExcitationWindow",
    "ProductDecayFit",
    "TraceBlockCheck",
    "TraceBoundReport",
    "normalized_gram",
    "excitation_level_single",
    "excitation_level_network",
    "fit_product_decay",
    "trace_bound_report",
    "covariance_intersection_gap",
    "fusion_sandwich_gaps",
    "matrix_inversion_residual",
]

NO_DECAY_RATE = 1.0 - 1e-3


def normalized_gram(phis) -> np.ndarray:
    """Average of phi phi' / (1 + ||phi||^2) over the sample rows.

    The result is symmetric PSD with every eigenvalue in [0, 1] because
    each summand has spectral norm below one.
    """
    phis = np.atleast_2d(np.asarray(phis, dtype=float))
    norms = 1.0 + np.einsum("km,km->k", phis, phis)
    gram = np.einsum("ka,kb,k->ab", phis, phis, 1.0 / norms)
    return gram / phis.shape[0]


@dataclass(frozen=True)
class ExcitationEstimate:
    """Monte Carlo estimate of a windowed minimum-eigenvalue excitation level."""

    value: float
    std_error: float
    mc_samples: int

    @property
    def lower_confidence_bound(self) -> float:
        """Three-standard-error lower bound."""
        return self.value - 3.0 * self.std_error


def _mc_window_grams(
    gens: Sequence[RegressorGenerator], h: int, mc: int, rng: np.random.Generator
) -> np.ndarray:
    """(mc, m, m) per-replication sums of normalized Grams over the window.

    Each replication simulates every generator h steps forward from its
    frozen state with fresh innovations; the generators themselves are not
    advanced.
    """
    m = gens[0].m
    sums = np.zeros((mc, m, m))
    for gen in gens:
        phi = gen.sample_futures(h, mc, rng)          # (mc, h, m)
        norms = 1.0 + np.einsum("kjm,kjm->kj", phi, phi)
        sums += np.einsum("kja,kjb,kj->kab", phi, phi, 1.0 / norms)
    return sums


def _min_eig_estimate(window_sums: np.ndarray, scale: float, mc: int) -> ExcitationEstimate:
    per_rep = window_sums / scale
    mean = per_rep.mean(axis=0)
    eigvals, eigvecs = np.linalg.eigh(0.5 * (mean + mean.T))
    v = eigvecs[:, 0]
    # Rayleigh projections of the replications onto the minimizing
    # direction give a delta-method standard error for the estimate.
    z = np.einsum("kab,a,b->k", per_rep, v, v)
    std_error = float(z.std(ddof=1) / np.sqrt(mc)) if mc > 1 else 0.0
    # The averaged matrix is PSD; negative eigenvalues are rounding noise.
    value = float(min(max(eigvals[0], 0.0), 1.0))
    return ExcitationEstimate(value=value, std_error=std_error, mc_samples=mc)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def excitation_level_single(
    gen: RegressorGenerator, h: int, mc: int, rng
) -> ExcitationEstimate:
    """Single-sensor window excitation from the generator's frozen state.

    Estimates the smallest eigenvalue of the conditional expectation of
    the window-summed normalized Gram, normalized by 1 / (h + 1) over the
    h summands.
    """
    if mc < 1:
        raise ValueError(f"Monte Carlo sample count must be >= 1, got {mc}")
    if h < 1:
        raise ValueError(f"window length must be >= 1, got {h}")
    sums = _mc_window_grams([gen], h, mc, _as_rng(rng))
    return _min_eig_estimate(sums, float(h + 1), mc)


def excitation_level_network(
    gens: Sequence[RegressorGenerator], h: int, mc: int, rng
) -> ExcitationEstimate:
    """Network-wide window excitation, averaged over sensors and the window.

    Normalization is 1 / (n (h + 1)); with a single sensor this reduces
    exactly to ``excitation_level_single``.
    """
    if mc < 1:
        raise ValueError(f"Monte Carlo sample count must be >= 1, got {mc}")
    if h < 1:
        raise ValueError(f"window length must be >= 1, got {h}")
    sums = _mc_window_grams(gens, h, mc, _as_rng(rng))
    return _min_eig_estimate(sums, float(len(gens) * (h + 1)), mc)


@dataclass(frozen=True)
class ExcitationWindow:
    """Per-sensor regressor samples over one h-step window starting at kh."""

    h: int
    start: int
    samples: np.ndarray      # (n, h, m)

    def realized_gram(self) -> np.ndarray:
        """Unconditional normalized Gram of the realized window samples."""
        n, h, m = self.samples.shape
        return normalized_gram(self.samples.reshape(n * h, m))


@dataclass(frozen=True)
class ProductDecayFit:
    """Least-squares geometric fit of expected products of (1 - a_k)."""

    rate: float              # fitted per-step factor, in (0, 1]
    scale: float             # fitted constant in front of the geometric law
    gaps: np.ndarray         # window lengths used in the fit
    mean_products: np.ndarray  # estimated expected products per gap

    @property
    def no_empirical_decay(self) -> bool:
        return self.rate >= NO_DECAY_RATE


def fit_product_decay(samples, max_gap: int | None = None) -> ProductDecayFit:
    """Fit E[prod (1 - a_j)] over window lengths to a geometric law.

    ``samples`` holds replications of the sequence row-wise, with every
    entry in [0, 1].  Products over all windows of each length are
    averaged across replications and start positions, and the log of the
    mean is regressed on the window length.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.min() < 0.0 or samples.max() > 1.0:
        raise ValueError("sequence samples must lie in [0, 1]")
    T = samples.shape[1]
    if T < 2:
        raise ValueError("need at least two sequence entries to fit a decay rate")
    G = min(max_gap or T, T)
    factors = 1.0 - samples
    gaps = np.arange(1, G + 1)
    means = np.empty(G)
    for g in gaps:
        windows = np.lib.stride_tricks.sliding_window_view(factors, g, axis=1)
        means[g - 1] = windows.prod(axis=-1).mean()
    positive = means > 0.0
    if positive.sum() < 2:
        # Products collapsed to zero almost immediately: maximal decay.
        return ProductDecayFit(rate=0.0, scale=1.0, gaps=gaps, mean_products=means)
    slope, intercept = np.polyfit(gaps[positive], np.log(means[positive]), 1)
    return ProductDecayFit(
        rate=float(min(np.exp(slope), 1.0)),
        scale=float(np.exp(intercept)),
        gaps=gaps,
        mean_products=means,
    )


@dataclass(frozen=True)
class TraceBlockCheck:
    """One consecutive block pair of the covariance-trace recursion."""

    s: int
    T_s: float
    T_next: float
    b_next: float
    c1: float
    c2: float
    rhs: float
    gap: float

    @property
    def ok(self) -> bool:
        return self.gap <= 0.0


@dataclass(frozen=True)
class TraceBoundReport:
    """Blockwise covariance-trace bound along a diffusion trajectory.

    With window length h and graph diameter D (block length h' = h + D),
    the summed covariance traces per block satisfy

        T_{s+1} <= (1 - b_{s+1}) T_s + d,    d = 1.5 n h (h' + 1) Tr(Q)

    for every pair of complete blocks s >= 1.  The initial pair is not
    checked: the block sums are only defined from s = 1 on, and the bound
    with the conventional empty T_0 = 0 does not hold for arbitrary
    initial covariances.
    """

    h: int
    graph_diameter: int
    h_prime: int
    a_min: float
    d: float
    T: np.ndarray            # block sums, T[s - 1] holds T_s for s = 1..S
    checks: tuple[TraceBlockCheck, ...]

    @property
    def violations(self) -> tuple[TraceBlockCheck, ...]:
        return tuple(chk for chk in self.checks if not chk.ok)

    @property
    def ok(self) -> bool:
        return not self.violations


def trace_bound_report(
    traj: Trajectory,
    h: int,
    graph_diameter: int | None = None,
    a_min: float | None = None,
    rel_slack: float = 1e-8,
) -> TraceBoundReport:
    """Evaluate the blockwise trace recursion on a retained trajectory."""
    if traj.adjacency is None:
        raise ValueError("trace bound applies to distributed trajectories only")
    if h < 1:
        raise ValueError(f"window length must be >= 1, got {h}")
    if graph_diameter is None:
        # Single-node convention: one hop.
        graph_diameter = max(diameter(traj.adjacency), 1)
    if graph_diameter < 1:
        raise ValueError("graph diameter must be >= 1")
    if a_min is None:
        a_min = min_hop_weight(traj.adjacency)
    n, m, K = traj.n, traj.m, traj.steps
    h_prime = h + graph_diameter
    n_blocks = K // h_prime
    if n_blocks < 2:
        raise ValueError(
            f"trajectory too short: {K} steps give {n_blocks} complete blocks of "
            f"length {h_prime}, need at least 2"
        )
    Q = traj.Q
    d = 1.5 * n * h * (h_prime + 1) * float(np.trace(Q))

    def block_sum(s: int) -> float:
        ks = np.arange((s - 1) * h_prime + graph_diameter, s * h_prime)
        return float(sum(np.trace(traj.P[k + 1].sum(axis=0)) for k in ks))

    T = np.array([block_sum(s) for s in range(1, n_blocks + 1)])

    checks = []
    for s in range(1, n_blocks):
        base = traj.P[s * h_prime].sum(axis=0) + h_prime * Q
        gram_sum = np.zeros((m, m))
        for k in range(s * h_prime + graph_diameter, (s + 1) * h_prime):
            for j in range(n):
                phi = traj.phi[k, j]
                gram_sum += np.outer(phi, phi) / (1.0 + phi @ phi)
        c1 = float(np.trace(base @ base @ gram_sum))
        c2 = float(
            np.sum(traj.r + 1.0)
            * (1.0 + np.linalg.eigvalsh(base).max())
            * np.trace(base)
        )
        b_next = a_min**2 * c1 / (n * h * c2)
        rhs = (1.0 - b_next) * T[s - 1] + d
        gap = T[s] - rhs - rel_slack * max(1.0, abs(rhs))
        checks.append(
            TraceBlockCheck(
                s=s, T_s=T[s - 1], T_next=T[s], b_next=b_next, c1=c1, c2=c2,
                rhs=rhs, gap=gap,
            )
        )
    return TraceBoundReport(
        h=h,
        graph_diameter=graph_diameter,
        h_prime=h_prime,
        a_min=a_min,
        d=d,
        T=T,
        checks=tuple(checks),
    )


def covariance_intersection_gap(adj: AdjacencyMatrix, Q_blocks) -> float:
    """Smallest eigenvalue of the fusion gain of covariance intersection.

    For per-sensor SPD matrices Q_i and fused Q'_i = sum_j a[j, i] Q_j,
    the expanded-adjacency quadratic form never exceeds the fused block
    diagonal; the returned minimum eigenvalue of the difference is
    nonnegative up to rounding (and exactly zero for the identity graph).
    """
    Q_blocks = np.asarray(Q_blocks, dtype=float)
    n, m, _ = Q_blocks.shape
    if adj.n != n:
        raise ValueError(f"adjacency is {adj.n} x {adj.n} but got {n} blocks")
    for i in range(n):
        if np.linalg.eigvalsh(0.5 * (Q_blocks[i] + Q_blocks[i].T)).min() <= 0.0:
            raise ValueError(f"block {i} is not symmetric positive definite")
    fused = np.einsum("ji,jab->iab", adj.weights, Q_blocks)
    expanded = kron_expand(adj, m)
    diff = block_diag(fused) - expanded.T @ block_diag(Q_blocks) @ expanded
    return float(np.linalg.eigvalsh(0.5 * (diff + diff.T)).min())


def fusion_sandwich_gaps(
    P_blocks, P_bar_blocks, adj: AdjacencyMatrix
) -> tuple[float, float]:
    """Minimum eigenvalues of the two combine-step sandwich inequalities.

    Given the fused covariances P and the pre-combine covariances P_bar of
    one step, both

        P^-1 - A' P_bar^-1 A    and    P_bar - A P A'

    (with A the identity-expanded adjacency) are PSD up to rounding.
    """
    P_blocks = np.asarray(P_blocks, dtype=float)
    P_bar_blocks = np.asarray(P_bar_blocks, dtype=float)
    m = P_blocks.shape[1]
    expanded = kron_expand(adj, m)
    P_inv = block_diag(np.linalg.inv(P_blocks))
    P_bar_inv = block_diag(np.linalg.inv(P_bar_blocks))
    first = P_inv - expanded.T @ P_bar_inv @ expanded
    second = block_diag(P_bar_blocks) - expanded @ block_diag(P_blocks) @ expanded.T
    return (
        float(np.linalg.eigvalsh(0.5 * (first + first.T)).min()),
        float(np.linalg.eigvalsh(0.5 * (second + second.T)).min()),
    )


def matrix_inversion_residual(A, B, C, D) -> float:
    """Relative residual of the rank-update inversion identity.

    Compares (A + B C D)^-1 against
    A^-1 - A^-1 B (C^-1 + D A^-1 B)^-1 D A^-1 when all inverses exist.
    """
    A, B, C, D = (np.asarray(M, dtype=float) for M in (A, B, C, D))
    direct = np.linalg.inv(A + B @ C @ D)
    A_inv = np.linalg.inv(A)
    woodbury = A_inv - A_inv @ B @ np.linalg.inv(np.linalg.inv(C) + D @ A_inv @ B) @ D @ A_inv
    scale = max(1.0, float(np.abs(direct).max()))
    return float(np.abs(direct - woodbury).max() / scale)
