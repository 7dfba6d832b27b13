"""Diffusion combine step and full network filter iteration.

Each iteration performs a local adapt per sensor followed by one
information exchange: every sensor fuses its in-neighbors' intermediate
inverse covariances and estimates by covariance intersection,

    P_next[i]^-1     = sum_l a[l, i] P_bar[l]^-1
    theta_next[i]    = P_next[i] sum_l a[l, i] P_bar[l]^-1 theta_bar[l]

with the sums running over neighbors with positive weight only.  With the
identity adjacency the combine is the identity and the network degenerates
to independent non-cooperative filters.

``stacked_step`` re-implements the same iteration through dense
network-level block matrices; it exists solely as an independent oracle
for ``dkf_step``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AdjacencyMatrix, kron_expand
from .kalman import AdaptResult, SensorFilterState, adapt, symmetrize
from .signals import ObservationRecord, SignalSimulator, stack

__all__ = [
    "NetworkFilterState",
    "ErrorState",
    "Trajectory",
    "ErrorRecursionReport",
    "CombineNumericalError",
    "InsufficientTraceError",
    "combine",
    "dkf_step",
    "stacked_step",
    "simulate",
    "check_error_recursions",
    "spd_inverse",
    "block_diag",
    "gain_block",
]

# Information sums below this eigenvalue floor abort the run: they cannot
# occur for valid inputs (P_bar >= Q > 0 and unit column sums) and signal
# a bug or a pathological configuration.
COMBINE_EIG_FLOOR = 1e-14


class CombineNumericalError(ArithmeticError):
    """Information-matrix fusion hit a numerically singular sum."""


class InsufficientTraceError(ValueError):
    """Trajectory lacks retained data required by a diagnostic."""


def spd_inverse(M: np.ndarray, floor: float = COMBINE_EIG_FLOOR) -> np.ndarray:
    """Invert a symmetric positive definite matrix via Cholesky.

    Raises CombineNumericalError instead of silently regularizing when the
    smallest eigenvalue falls below ``floor``.
    """
    sym = symmetrize(np.asarray(M, dtype=float))
    lam_min = float(np.linalg.eigvalsh(sym).min())
    if not np.isfinite(lam_min) or lam_min < floor:
        raise CombineNumericalError(
            f"matrix not safely positive definite: min eigenvalue {lam_min:.3e} < {floor:.0e}"
        )
    L = np.linalg.cholesky(sym)
    L_inv = np.linalg.inv(L)
    return symmetrize(L_inv.T @ L_inv)


@dataclass(frozen=True)
class NetworkFilterState:
    """All sensors' filter states at one time index."""

    k: int
    sensors: tuple[SensorFilterState, ...]
    adjacency: AdjacencyMatrix

    @property
    def n(self) -> int:
        return len(self.sensors)

    @property
    def m(self) -> int:
        return self.sensors[0].m


def combine(
    adapt_results: list[AdaptResult] | tuple[AdaptResult, ...],
    adj: AdjacencyMatrix,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fuse every sensor's neighborhood; returns per-sensor (theta, P).

    Inverse covariances are convex-combined with the incoming-edge weights
    a[l, i]; sensors with zero weight contribute nothing and are skipped.
    """
    n = len(adapt_results)
    if adj.n != n:
        raise ValueError(f"adjacency is {adj.n} x {adj.n} but there are {n} adapt results")
    weights = adj.weights
    inv_cache: dict[int, np.ndarray] = {}
    fused = []
    for i in range(n):
        neighbors = np.flatnonzero(weights[:, i] > 0.0)
        m = adapt_results[i].P_bar.shape[0]
        info_sum = np.zeros((m, m))
        info_mean = np.zeros(m)
        for l in neighbors:
            if l not in inv_cache:
                inv_cache[l] = spd_inverse(adapt_results[l].P_bar)
            w = weights[l, i]
            info_sum += w * inv_cache[l]
            info_mean += w * (inv_cache[l] @ adapt_results[l].theta_bar)
        P_next = spd_inverse(info_sum)
        fused.append((P_next @ info_mean, P_next))
    return fused


def dkf_step(net: NetworkFilterState, record: ObservationRecord) -> NetworkFilterState:
    """One full network iteration: per-sensor adapt, then one combine."""
    results = [
        adapt(state, record.phi[i], record.y[i]) for i, state in enumerate(net.sensors)
    ]
    fused = combine(results, net.adjacency)
    sensors = tuple(
        SensorFilterState(theta_hat=theta, P=P, r=old.r, Q=old.Q)
        for (theta, P), old in zip(fused, net.sensors)
    )
    return NetworkFilterState(k=net.k + 1, sensors=sensors, adjacency=net.adjacency)


def block_diag(blocks: np.ndarray) -> np.ndarray:
    """(n, m, m) stack of blocks -> (m n, m n) block-diagonal matrix."""
    n, m, _ = blocks.shape
    out = np.zeros((m * n, m * n))
    for i in range(n):
        out[i * m : (i + 1) * m, i * m : (i + 1) * m] = blocks[i]
    return out


def gain_block(gains: np.ndarray) -> np.ndarray:
    """(n, m) per-sensor gain vectors -> (m n, n) block-column matrix."""
    n, m = gains.shape
    out = np.zeros((m * n, n))
    for i in range(n):
        out[i * m : (i + 1) * m, i] = gains[i]
    return out


def stacked_step(net: NetworkFilterState, record: ObservationRecord) -> NetworkFilterState:
    """Same iteration as ``dkf_step`` via dense (m n)-dimensional algebra.

    Cost is O((m n)^3) against O(n m^3) for the per-sensor path, so this is
    a cross-validation oracle, not the production route.
    """
    n, m = net.n, net.m
    views = stack(record)
    Phi = views.Phi
    P_blk = block_diag(np.stack([s.P for s in net.sensors]))
    Q_diag = block_diag(np.stack([s.Q for s in net.sensors]))
    theta_hat = np.concatenate([s.theta_hat for s in net.sensors])
    R_n = np.diag([s.r for s in net.sensors])

    L = P_blk @ Phi @ np.linalg.inv(R_n + Phi.T @ P_blk @ Phi)
    theta_bar = theta_hat + L @ (views.Y - Phi.T @ theta_hat)
    P_bar = P_blk - L @ Phi.T @ P_blk + Q_diag
    P_bar_blocks = np.stack(
        [symmetrize(P_bar[i * m : (i + 1) * m, i * m : (i + 1) * m]) for i in range(n)]
    )

    # Combine: stack the inverse blocks, mix them with the expanded
    # adjacency, and re-invert block-wise.
    P_bar_inv_blocks = np.stack([spd_inverse(P_bar_blocks[i]) for i in range(n)])
    vec_bar = P_bar_inv_blocks.reshape(n * m, m)
    kron_T = kron_expand(net.adjacency, m).T
    vec_next = kron_T @ vec_bar
    P_next_blocks = np.stack(
        [spd_inverse(vec_next[i * m : (i + 1) * m]) for i in range(n)]
    )
    theta_next = (
        block_diag(P_next_blocks) @ kron_T @ block_diag(P_bar_inv_blocks) @ theta_bar
    )

    sensors = tuple(
        SensorFilterState(
            theta_hat=theta_next[i * m : (i + 1) * m],
            P=P_next_blocks[i],
            r=old.r,
            Q=old.Q,
        )
        for i, old in enumerate(net.sensors)
    )
    return NetworkFilterState(k=net.k + 1, sensors=sensors, adjacency=net.adjacency)


@dataclass
class Trajectory:
    """Retained traces of one filter run over K steps.

    Index k of the step arrays refers to the update consuming observation
    k; ``theta``, ``theta_hat`` and ``P`` have K + 1 entries (index 0 is
    the initial condition).  ``delta[k]`` is the parameter increment
    applied between times k and k + 1.
    """

    adjacency: AdjacencyMatrix | None
    Q: np.ndarray            # (m, m)
    r: np.ndarray            # (n,)
    theta: np.ndarray        # (K+1, m)
    theta_hat: np.ndarray    # (K+1, n, m)
    P: np.ndarray            # (K+1, n, m, m)
    theta_bar: np.ndarray    # (K, n, m)
    P_bar: np.ndarray        # (K, n, m, m)
    gain: np.ndarray         # (K, n, m)
    phi: np.ndarray          # (K, n, m)
    y: np.ndarray            # (K, n)
    v: np.ndarray | None     # (K, n)
    delta: np.ndarray | None  # (K, m)
    xi_log: np.ndarray | None  # (K,) noise-size log ||V_k|| + ||Delta_{k+1}||

    @property
    def steps(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def m(self) -> int:
        return self.phi.shape[2]

    def squared_errors(self) -> np.ndarray:
        """(K+1, n) squared estimation errors against the true parameter."""
        diff = self.theta_hat - self.theta[:, None, :]
        return np.einsum("kim,kim->ki", diff, diff)


def simulate(
    net: NetworkFilterState,
    signals: SignalSimulator,
    steps: int,
    distributed: bool = True,
) -> Trajectory:
    """Run the network filter for ``steps`` iterations with full retention.

    With ``distributed=False`` the combine phase is skipped and every
    sensor runs the plain non-cooperative filter on the same signals.
    """
    n, m = net.n, net.m
    theta = np.zeros((steps + 1, m))
    theta_hat = np.zeros((steps + 1, n, m))
    P = np.zeros((steps + 1, n, m, m))
    theta_bar = np.zeros((steps, n, m))
    P_bar = np.zeros((steps, n, m, m))
    gains = np.zeros((steps, n, m))
    phis = np.zeros((steps, n, m))
    ys = np.zeros((steps, n))
    vs = np.zeros((steps, n))
    deltas = np.zeros((steps, m))
    xi_log = np.zeros(steps)

    theta[0] = signals.parameter.theta
    theta_hat[0] = np.stack([s.theta_hat for s in net.sensors])
    P[0] = np.stack([s.P for s in net.sensors])

    for k in range(steps):
        record = signals.step()
        results = [
            adapt(state, record.phi[i], record.y[i])
            for i, state in enumerate(net.sensors)
        ]
        if distributed:
            fused = combine(results, net.adjacency)
        else:
            fused = [(res.theta_bar, res.P_bar) for res in results]
        sensors = tuple(
            SensorFilterState(theta_hat=t, P=Pn, r=old.r, Q=old.Q)
            for (t, Pn), old in zip(fused, net.sensors)
        )
        net = NetworkFilterState(k=net.k + 1, sensors=sensors, adjacency=net.adjacency)

        phis[k] = record.phi
        ys[k] = record.y
        vs[k] = record.v
        deltas[k] = record.delta_next
        theta[k + 1] = record.theta + record.delta_next
        theta_bar[k] = np.stack([res.theta_bar for res in results])
        P_bar[k] = np.stack([res.P_bar for res in results])
        gains[k] = np.stack([res.gain for res in results])
        theta_hat[k + 1] = np.stack([s.theta_hat for s in sensors])
        P[k + 1] = np.stack([s.P for s in sensors])
        xi_log[k] = np.linalg.norm(record.v) + np.sqrt(n) * np.linalg.norm(
            record.delta_next
        )

    return Trajectory(
        adjacency=net.adjacency if distributed else None,
        Q=net.sensors[0].Q.copy(),
        r=np.array([s.r for s in net.sensors]),
        theta=theta,
        theta_hat=theta_hat,
        P=P,
        theta_bar=theta_bar,
        P_bar=P_bar,
        gain=gains,
        phi=phis,
        y=ys,
        v=vs,
        delta=deltas,
        xi_log=xi_log,
    )


@dataclass(frozen=True)
class ErrorState:
    """Propagated estimation errors at one step of the error recursions."""

    tilde_theta: np.ndarray       # (n, m) errors of the combined estimates
    tilde_theta_bar: np.ndarray   # (n, m) errors of the intermediate estimates


@dataclass(frozen=True)
class ErrorRecursionReport:
    """Deviation between directly-subtracted and recursion-propagated errors."""

    max_dev_combined: float
    max_dev_intermediate: float
    max_dev_stacked: float
    threshold: float
    final: ErrorState | None = None

    @property
    def max_dev(self) -> float:
        return max(self.max_dev_combined, self.max_dev_intermediate, self.max_dev_stacked)

    @property
    def ok(self) -> bool:
        return self.max_dev < self.threshold


def check_error_recursions(traj: Trajectory) -> ErrorRecursionReport:
    """Replay the error recursions and compare against direct subtraction.

    The recursions propagate the estimation errors from the gains, noises
    and parameter increments alone, never referencing the estimates:

        tilde_bar[k+1] = (I - L_k phi_k') tilde[k] - L_k v_k + delta[k+1]
        tilde[k+1, i]  = P[k+1, i] sum_l a[l, i] P_bar[k+1, l]^-1 tilde_bar[k+1, l]

    plus the equivalent stacked network form.  The deviation from the
    directly subtracted errors is pure floating-point noise; the contract
    is max |dev| < 1e-8 (1 + max ||theta||).
    """
    if traj.v is None or traj.delta is None:
        raise InsufficientTraceError(
            "error recursion replay needs retained observation noise and parameter increments"
        )
    n, m, K = traj.n, traj.m, traj.steps
    if traj.adjacency is None:
        weights = np.eye(n)
        kron_T = np.eye(n * m)
    else:
        weights = traj.adjacency.weights
        kron_T = kron_expand(traj.adjacency, m).T

    tilde = traj.theta[0][None, :] - traj.theta_hat[0]
    tilde_stacked = tilde.reshape(n * m)
    tilde_bar = np.zeros((n, m))
    dev_combined = 0.0
    dev_intermediate = 0.0
    dev_stacked = 0.0

    for k in range(K):
        L = traj.gain[k]
        phi = traj.phi[k]
        # Intermediate errors, per sensor.
        for i in range(n):
            tilde_bar[i] = (
                (np.eye(m) - np.outer(L[i], phi[i])) @ tilde[i]
                - L[i] * traj.v[k, i]
                + traj.delta[k]
            )
        direct_bar = traj.theta[k + 1][None, :] - traj.theta_bar[k]
        dev_intermediate = max(dev_intermediate, float(np.abs(tilde_bar - direct_bar).max()))

        # Combined errors, per sensor.
        P_bar_inv = np.stack([spd_inverse(traj.P_bar[k, l]) for l in range(n)])
        tilde_next = np.zeros((n, m))
        for i in range(n):
            mixed = np.zeros(m)
            for l in np.flatnonzero(weights[:, i] > 0.0):
                mixed += weights[l, i] * (P_bar_inv[l] @ tilde_bar[l])
            tilde_next[i] = traj.P[k + 1, i] @ mixed
        direct = traj.theta[k + 1][None, :] - traj.theta_hat[k + 1]
        dev_combined = max(dev_combined, float(np.abs(tilde_next - direct).max()))
        tilde = tilde_next

        # Stacked network form.
        L_blk = gain_block(L)
        Phi_blk = gain_block(phi)
        V = traj.v[k]
        Delta = np.tile(traj.delta[k], n)
        mix = block_diag(traj.P[k + 1]) @ kron_T @ block_diag(P_bar_inv)
        tilde_stacked = mix @ (
            (np.eye(n * m) - L_blk @ Phi_blk.T) @ tilde_stacked - L_blk @ V + Delta
        )
        dev_stacked = max(
            dev_stacked, float(np.abs(tilde_stacked.reshape(n, m) - direct).max())
        )

    threshold = 1e-8 * (1.0 + float(np.linalg.norm(traj.theta, axis=1).max()))
    return ErrorRecursionReport(
        max_dev_combined=dev_combined,
        max_dev_intermediate=dev_intermediate,
        max_dev_stacked=dev_stacked,
        threshold=threshold,
        final=ErrorState(tilde_theta=tilde.copy(), tilde_theta_bar=tilde_bar.copy()),
    )
