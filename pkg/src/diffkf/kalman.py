"""Per-sensor Kalman filter arithmetic.

One update kernel serves both the non-cooperative filter and the adapt
phase of the diffusion algorithm:

    gain      L = P phi / (r + phi' P phi)
    estimate  theta_bar = theta_hat + L (y - phi' theta_hat)
    covariance P_bar = P - P phi phi' P / (r + phi' P phi) + Q

Covariances are kept in covariance form and re-symmetrized after every
update to suppress floating-point drift.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["SensorFilterState", "AdaptResult", "adapt", "gain", "kf_step", "symmetrize"]

SYMMETRY_RTOL = 1e-12


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _require_spd(M: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(symmetrize(M)).min() <= 0.0:
        raise ValueError(f"{name} must be positive definite")


@dataclass(frozen=True)
class SensorFilterState:
    """Estimate, covariance, and priors for one sensor.

    ``r`` and ``Q`` are the prior variances assumed for the observation
    noise and the parameter increments; they are constants per run.
    """

    theta_hat: np.ndarray   # (m,)
    P: np.ndarray           # (m, m) symmetric positive definite
    r: float
    Q: np.ndarray           # (m, m) symmetric positive definite

    def __post_init__(self):
        theta = np.asarray(self.theta_hat, dtype=float)
        P = np.asarray(self.P, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        m = theta.shape[0]
        if P.shape != (m, m) or Q.shape != (m, m):
            raise ValueError(f"P and Q must be {m} x {m}, got {P.shape} and {Q.shape}")
        if self.r <= 0.0:
            raise ValueError(f"prior noise variance r must be > 0, got {self.r}")
        _require_spd(P, "P")
        _require_spd(Q, "Q")
        object.__setattr__(self, "theta_hat", theta.copy())
        object.__setattr__(self, "P", P.copy())
        object.__setattr__(self, "Q", Q.copy())

    @property
    def m(self) -> int:
        return self.theta_hat.shape[0]


@dataclass(frozen=True)
class AdaptResult:
    """Intermediate estimate and covariance after one local update."""

    theta_bar: np.ndarray   # (m,)
    P_bar: np.ndarray       # (m, m)
    gain: np.ndarray        # (m,)


def gain(state: SensorFilterState, phi) -> np.ndarray:
    """Adaptation gain L = P phi / (r + phi' P phi).

    Its norm never exceeds sqrt(||P||) / (2 sqrt(r)); asserted here since
    the bound is cheap and catches corrupted covariances early.
    """
    phi = np.asarray(phi, dtype=float)
    P_phi = state.P @ phi
    L = P_phi / (state.r + phi @ P_phi)
    bound = np.sqrt(np.linalg.norm(state.P, 2)) / (2.0 * np.sqrt(state.r))
    assert np.linalg.norm(L) <= bound * (1.0 + 1e-10), "gain bound violated"
    return L


def adapt(state: SensorFilterState, phi, y: float) -> AdaptResult:
    """One local Kalman update from observation (phi, y).

    The returned covariance dominates Q (the subtracted rank-one term never
    exceeds P) and never exceeds P + Q.
    """
    phi = np.asarray(phi, dtype=float)
    if not np.isfinite(phi).all():
        raise ValueError("regressor must be finite")
    P_phi = state.P @ phi
    denom = state.r + phi @ P_phi
    L = P_phi / denom
    innovation = y - phi @ state.theta_hat
    theta_bar = state.theta_hat + L * innovation
    P_bar = symmetrize(state.P - np.outer(P_phi, P_phi) / denom + state.Q)
    return AdaptResult(theta_bar=theta_bar, P_bar=P_bar, gain=L)


def kf_step(state: SensorFilterState, phi, y: float) -> SensorFilterState:
    """Non-cooperative filter step: the adapt result becomes the next state."""
    result = adapt(state, phi, y)
    return replace(state, theta_hat=result.theta_bar, P=result.P_bar)
