"""Signal generation for time-varying stochastic linear regression.

Each sensor i observes at time k

    y[k, i] = phi[k, i] . theta[k] + v[k, i]

where the unknown parameter performs a random walk theta[k] = theta[k-1]
+ delta[k], and the regressors phi[k, i] are produced by per-sensor linear
state-space generators

    x[k, i]   = A_i x[k-1, i] + B_i xi[k, i]
    phi[k, i] = C_i x[k, i].

Randomness comes from counter-based Philox streams, one independent stream
per (run, sensor, role), so Monte Carlo runs parallelize without sequence
coupling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ParameterProcess",
    "RegressorGenerator",
    "NoiseSpec",
    "SensorObservation",
    "ObservationRecord",
    "StackedViews",
    "SignalSimulator",
    "SignalConfigError",
    "observe",
    "stack",
    "stream",
    "psd_factor",
]

# Role indices for per-run substreams.
ROLE_PARAMETER = 0


class SignalConfigError(ValueError):
    """Inconsistent generator or noise configuration."""


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream addressed by (master_seed, key...).

    Streams with distinct keys never overlap; the same key always yields
    the same sequence.  Harness convention: key = (run_index, role) with
    role 0 for the parameter walk, 1 + i for sensor i's regressor
    innovations, and 1 + n + i for sensor i's observation noise.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = cov for a symmetric PSD matrix.

    Uses an eigendecomposition so exactly singular covariances (including
    zero) are accepted; tiny negative eigenvalues from rounding are clipped.
    """
    cov = np.asarray(cov, dtype=float)
    sym = 0.5 * (cov + cov.T)
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise SignalConfigError("covariance matrix must be symmetric")
    w, v = np.linalg.eigh(sym)
    if w.min() < -1e-10 * max(1.0, w.max()):
        raise SignalConfigError(f"covariance matrix must be PSD, min eigenvalue {w.min():.3e}")
    return v * np.sqrt(np.clip(w, 0.0, None))


class ParameterProcess:
    """Random-walk parameter theta[k] = theta[k-1] + delta[k]."""

    def __init__(self, theta0, delta_cov, rng: np.random.Generator):
        self.theta = np.asarray(theta0, dtype=float).copy()
        if self.theta.ndim != 1:
            raise SignalConfigError("theta0 must be a vector")
        self.m = self.theta.shape[0]
        self.delta_cov = np.asarray(delta_cov, dtype=float)
        if self.delta_cov.shape != (self.m, self.m):
            raise SignalConfigError(
                f"delta_cov must be {self.m} x {self.m}, got {self.delta_cov.shape}"
            )
        self._factor = psd_factor(self.delta_cov)
        self.rng = rng

    def step(self) -> tuple[np.ndarray, np.ndarray]:
        """Draw one increment, advance, and return (theta, delta)."""
        delta = self._factor @ self.rng.standard_normal(self.m)
        self.theta = self.theta + delta
        return self.theta.copy(), delta


class RegressorGenerator:
    """Per-sensor linear state-space regressor source."""

    def __init__(self, A, B, C, x0, xi_cov, rng: np.random.Generator):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.x = np.asarray(x0, dtype=float).copy()
        m = self.x.shape[0]
        if self.A.shape != (m, m):
            raise SignalConfigError(f"A must be {m} x {m}, got {self.A.shape}")
        if self.B.ndim != 2 or self.B.shape[0] != m:
            raise SignalConfigError(f"B must be {m} x p, got {self.B.shape}")
        if self.C.shape != (m, m):
            raise SignalConfigError(f"C must be {m} x {m}, got {self.C.shape}")
        self.p = self.B.shape[1]
        xi_cov = np.asarray(xi_cov, dtype=float)
        if xi_cov.shape == ():
            xi_cov = xi_cov.reshape(1, 1)
        if xi_cov.shape != (self.p, self.p):
            raise SignalConfigError(
                f"innovation covariance must be {self.p} x {self.p}, got {xi_cov.shape}"
            )
        self.xi_cov = xi_cov
        self._factor = psd_factor(xi_cov)
        self.rng = rng

    @property
    def m(self) -> int:
        return self.x.shape[0]

    def output(self) -> np.ndarray:
        """Regressor for the current state (no advancement)."""
        return self.C @ self.x

    def advance(self) -> np.ndarray:
        """Draw one innovation and advance the state; returns the innovation."""
        xi = self._factor @ self.rng.standard_normal(self.p)
        self.x = self.A @ self.x + self.B @ xi
        return xi

    def step(self) -> np.ndarray:
        """Advance the state and return the new regressor."""
        self.advance()
        return self.output()

    def clone(self, rng: np.random.Generator) -> "RegressorGenerator":
        """Copy frozen at the current state, driven by an independent stream."""
        return RegressorGenerator(self.A, self.B, self.C, self.x, self.xi_cov, rng)

    def sample_futures(self, steps: int, replications: int, rng: np.random.Generator) -> np.ndarray:
        """Monte Carlo futures from the current state, without advancing it.

        Simulates ``replications`` independent continuations of ``steps``
        steps each and returns their regressor outputs, shaped
        (replications, steps, m).
        """
        X = np.tile(self.x, (replications, 1))
        out = np.empty((replications, steps, self.m))
        for j in range(steps):
            xi = rng.standard_normal((replications, self.p)) @ self._factor.T
            X = X @ self.A.T + xi @ self.B.T
            out[:, j] = X @ self.C.T
        return out


@dataclass(frozen=True)
class NoiseSpec:
    """Scalar observation-noise model: Gaussian with given variance, or zero."""

    variance: float = 0.0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.variance < 0.0:
            raise SignalConfigError(f"noise variance must be >= 0, got {self.variance}")
        if self.kind not in ("gaussian", "zero"):
            raise SignalConfigError(f"unknown noise kind {self.kind!r}")

    def draw(self, rng: np.random.Generator, size=None):
        if self.kind == "zero" or self.variance == 0.0:
            return 0.0 if size is None else np.zeros(size)
        return rng.normal(0.0, np.sqrt(self.variance), size)


def observe(theta, phi, noise: NoiseSpec, rng: np.random.Generator) -> float:
    """One scalar observation phi . theta + v."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if theta.shape != phi.shape:
        raise SignalConfigError(f"dimension mismatch: theta {theta.shape} vs phi {phi.shape}")
    return float(phi @ theta + noise.draw(rng))


@dataclass(frozen=True)
class SensorObservation:
    """One sensor's observation at one time index."""

    k: int
    y: float
    phi: np.ndarray
    v: float | None = None


@dataclass(frozen=True)
class ObservationRecord:
    """All sensors' observations at time k.

    ``delta_next`` is the parameter increment applied after this
    observation (it drives theta[k] -> theta[k+1]); retaining it together
    with ``v`` makes the error recursions replayable.
    """

    k: int
    y: np.ndarray            # (n,)
    phi: np.ndarray          # (n, m)
    theta: np.ndarray | None = None      # (m,) true parameter at time k
    v: np.ndarray | None = None          # (n,)
    delta_next: np.ndarray | None = None  # (m,)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.phi.shape[1]

    @classmethod
    def from_sensor_observations(
        cls, observations: Sequence[SensorObservation], theta=None, delta_next=None
    ) -> "ObservationRecord":
        ks = {obs.k for obs in observations}
        if len(ks) != 1:
            raise SignalConfigError(f"observations span multiple time indices: {sorted(ks)}")
        vs = [obs.v for obs in observations]
        return cls(
            k=observations[0].k,
            y=np.array([obs.y for obs in observations], dtype=float),
            phi=np.stack([np.asarray(obs.phi, dtype=float) for obs in observations]),
            theta=None if theta is None else np.asarray(theta, dtype=float),
            v=None if any(v is None for v in vs) else np.array(vs, dtype=float),
            delta_next=None if delta_next is None else np.asarray(delta_next, dtype=float),
        )


@dataclass(frozen=True)
class StackedViews:
    """Network-stacked arrangement of one observation record.

    ``Phi`` places sensor i's regressor in block (i, i) of an (m n) x n
    matrix, so Y = Phi^T Theta + V holds exactly by construction.
    """

    Y: np.ndarray            # (n,)
    Phi: np.ndarray          # (m n, n)
    V: np.ndarray | None     # (n,)
    Theta: np.ndarray | None  # (m n,), n-fold replication
    Delta_next: np.ndarray | None  # (m n,), n-fold replication


def stack(record: ObservationRecord) -> StackedViews:
    """Build the stacked views (Y, Phi, V, Theta, Delta) of one record."""
    n, m = record.n, record.m
    Phi = np.zeros((m * n, n))
    for i in range(n):
        Phi[i * m : (i + 1) * m, i] = record.phi[i]
    return StackedViews(
        Y=record.y.copy(),
        Phi=Phi,
        V=None if record.v is None else record.v.copy(),
        Theta=None if record.theta is None else np.tile(record.theta, n),
        Delta_next=None if record.delta_next is None else np.tile(record.delta_next, n),
    )


class SignalSimulator:
    """Drives parameter, regressors, and noises forward in lockstep.

    ``step()`` emits the observation record for the current time index and
    then advances every process by one step.
    """

    def __init__(
        self,
        parameter: ParameterProcess,
        regressors: Sequence[RegressorGenerator],
        noises: Sequence[NoiseSpec],
        noise_rng: np.random.Generator,
    ):
        if len(regressors) != len(noises):
            raise SignalConfigError("need one noise spec per regressor generator")
        for gen in regressors:
            if gen.m != parameter.m:
                raise SignalConfigError("regressor dimension must match parameter dimension")
        self.parameter = parameter
        self.regressors = list(regressors)
        self.noises = list(noises)
        self.noise_rng = noise_rng
        self.k = 0

    @property
    def n(self) -> int:
        return len(self.regressors)

    def step(self) -> ObservationRecord:
        phi = np.stack([gen.output() for gen in self.regressors])
        theta = self.parameter.theta.copy()
        v = np.array([spec.draw(self.noise_rng) for spec in self.noises])
        y = phi @ theta + v
        _, delta = self.parameter.step()
        for gen in self.regressors:
            gen.advance()
        record = ObservationRecord(
            k=self.k, y=y, phi=phi, theta=theta, v=v, delta_next=delta
        )
        self.k += 1
        return record
