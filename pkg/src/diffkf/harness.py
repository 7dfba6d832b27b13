"""Experiment configuration, Monte Carlo orchestration, and outputs.

A run is described by a YAML config file (see the bundled ``fig1.cfg`` for
the canonical three-sensor example and the README for the schema).  The
harness executes M independent runs with identical initial states and
independent noise streams, accumulates per-sensor mean squared tracking
errors at the recording stride, and emits a CSV (the contractual output)
plus best-effort plots.

Results are deterministic given (config, master seed) regardless of the
worker count: every run derives its streams from its own run index and
aggregation happens in fixed run order.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import kernels
from .diffusion import NetworkFilterState, Trajectory
from .graph import AdjacencyMatrix, validate
from .kalman import SensorFilterState
from .signals import (
    NoiseSpec,
    ParameterProcess,
    RegressorGenerator,
    SignalSimulator,
    stream,
)

__all__ = [
    "ExperimentConfig",
    "TrackingErrorSeries",
    "RunArtifact",
    "ConfigError",
    "NumericalAbort",
    "load_config",
    "fig1_config",
    "run_monte_carlo",
    "prepare_run_noise",
    "simulate_one",
    "reference_run",
    "export_csv",
    "export_trajectory_csv",
    "export_observations_csv",
    "emit_plot",
]

MODES = ("distributed", "noncooperative", "both")
LOG_PLOT_RANGE = 1e3


class ConfigError(ValueError):
    """Configuration file is malformed or inconsistent."""


class NumericalAbort(ArithmeticError):
    """A run hit a numerical failure; carries run index and step."""

    def __init__(self, mode: str, run_index: int, step: int):
        self.mode = mode
        self.run_index = run_index
        self.step = step
        super().__init__(
            f"numerical abort in {mode} run {run_index} at step {step}: "
            "covariance no longer finite"
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully materialized description of one experiment."""

    n: int
    m: int
    p: int
    adjacency: np.ndarray        # (n, n)
    A: np.ndarray                # (n, m, m)
    B: np.ndarray                # (n, m, p)
    C: np.ndarray                # (n, m, m)
    x0: np.ndarray               # (n, m)
    xi_cov: np.ndarray           # (n, p, p)
    noise_var: np.ndarray        # (n,)
    noise_kind: str
    theta0: np.ndarray           # (m,)
    delta_cov: np.ndarray        # (m, m)
    r: np.ndarray                # (n,)
    Q: np.ndarray                # (m, m)
    P0: np.ndarray               # (n, m, m)
    theta_hat0: np.ndarray       # (n, m)
    horizon: int
    runs: int
    record_stride: int
    seed: int
    mode: str
    h: int = 5
    mc: int = 1000
    retain_traces: bool = False
    scale_interpretation: str = "variance"

    def record_ks(self) -> np.ndarray:
        ks = np.unique(
            np.concatenate(
                [[1], np.arange(self.record_stride, self.horizon + 1, self.record_stride)]
            )
        )
        return ks.astype(np.int64)

    def modes(self) -> tuple[str, ...]:
        if self.mode == "both":
            return ("noncooperative", "distributed")
        return (self.mode,)

    def adjacency_matrix(self) -> AdjacencyMatrix:
        return AdjacencyMatrix(self.adjacency)

    def to_dict(self) -> dict:
        out = {}
        for name, value in self.__dict__.items():
            out[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class TrackingErrorSeries:
    """Monte-Carlo-averaged squared tracking errors at the recorded indices."""

    mode: str
    ks: np.ndarray           # (R,)
    mse: np.ndarray          # (R, n) per-sensor mean squared error
    stderr: np.ndarray       # (R, n) Monte Carlo standard error (0 when runs == 1)
    runs: int

    def at(self, k: int) -> np.ndarray:
        idx = np.flatnonzero(self.ks == k)
        if idx.size != 1:
            raise KeyError(f"index {k} is not a recorded step")
        return self.mse[idx[0]]


@dataclass
class RunArtifact:
    """Everything one harness invocation produced."""

    config_hash: str
    series: dict[str, TrackingErrorSeries]
    traces: dict[str, Trajectory] = field(default_factory=dict)


def _parse_number(value, context: str) -> float:
    """Accept plain numbers and exact-rational strings like '2/3'."""
    if isinstance(value, bool):
        raise ConfigError(f"{context}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{context}: cannot parse number {value!r}") from exc
    raise ConfigError(f"{context}: expected a number, got {type(value).__name__}")


def _parse_vector(value, length: int, context: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{context}: expected a list of {length} numbers")
    vec = np.array([_parse_number(x, context) for x in value])
    if vec.shape != (length,):
        raise ConfigError(f"{context}: expected length {length}, got {vec.shape[0]}")
    return vec


def _parse_matrix(value, rows: int, cols: int, context: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{context}: expected a {rows} x {cols} matrix as a list of rows")
    if len(value) != rows:
        raise ConfigError(f"{context}: expected {rows} rows, got {len(value)}")
    return np.stack([_parse_vector(row, cols, f"{context} row {i + 1}") for i, row in enumerate(value)])


def _parse_cov(value, dim: int, context: str, square_scalar: bool) -> np.ndarray:
    """Scalar shorthand s -> s * I (squared first under stddev interpretation)."""
    if isinstance(value, (int, float, str)):
        s = _parse_number(value, context)
        if square_scalar:
            s = s * s
        if s < 0:
            raise ConfigError(f"{context}: scalar covariance must be >= 0, got {s}")
        return s * np.eye(dim)
    return _parse_matrix(value, dim, dim, context)


_TOP_KEYS = {
    "n", "m", "adjacency", "theta0", "delta_cov", "Q", "horizon", "runs",
    "record_stride", "seed", "mode", "sensors", "h", "mc", "retain_traces",
    "scale_interpretation",
}
_SENSOR_KEYS = {"A", "B", "C", "x0", "xi_var", "noise_var", "noise_kind", "r", "P0", "theta_hat0"}


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"missing required field {key!r}")
    return raw[key]


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        where = ""
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            where = f" (line {mark.line + 1}, column {mark.column + 1})"
        raise ConfigError(f"config parse error in {path}{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a mapping at top level")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")

    n = int(_require(raw, "n"))
    m = int(_require(raw, "m"))
    if n < 1 or m < 1:
        raise ConfigError(f"n and m must be >= 1, got n={n}, m={m}")

    interp = raw.get("scale_interpretation", "variance")
    if interp not in ("variance", "stddev"):
        raise ConfigError(
            f"scale_interpretation must be 'variance' or 'stddev', got {interp!r}"
        )
    square_scalar = interp == "stddev"

    mode = raw.get("mode", "both")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

    adjacency = _parse_matrix(_require(raw, "adjacency"), n, n, "adjacency")
    if mode in ("distributed", "both"):
        report = validate(AdjacencyMatrix(adjacency))
        if not report.ok:
            raise ConfigError(
                "adjacency failed validation: " + ", ".join(report.failed_flags())
            )

    sensors = _require(raw, "sensors")
    if not isinstance(sensors, list) or len(sensors) != n:
        raise ConfigError(f"sensors: expected a list of {n} entries")

    A = np.zeros((n, m, m))
    C = np.zeros((n, m, m))
    x0 = np.zeros((n, m))
    noise_var = np.zeros(n)
    r = np.zeros(n)
    P0 = np.zeros((n, m, m))
    theta_hat0 = np.zeros((n, m))
    B_list, xi_list, kinds = [], [], []
    for i, sensor in enumerate(sensors):
        ctx = f"sensors[{i + 1}]"
        if not isinstance(sensor, dict):
            raise ConfigError(f"{ctx}: expected a mapping")
        unknown = set(sensor) - _SENSOR_KEYS
        if unknown:
            raise ConfigError(f"{ctx}: unknown field(s): {', '.join(sorted(unknown))}")
        A[i] = _parse_matrix(_require_sensor(sensor, "A", ctx), m, m, f"{ctx}.A")
        B_rows = _require_sensor(sensor, "B", ctx)
        if not isinstance(B_rows, list) or len(B_rows) != m:
            raise ConfigError(f"{ctx}.B: expected {m} rows")
        p_i = len(B_rows[0]) if isinstance(B_rows[0], (list, tuple)) else 1
        B_list.append(_parse_matrix(B_rows, m, p_i, f"{ctx}.B"))
        C[i] = _parse_matrix(_require_sensor(sensor, "C", ctx), m, m, f"{ctx}.C")
        x0[i] = (
            _parse_vector(sensor["x0"], m, f"{ctx}.x0") if "x0" in sensor else np.ones(m)
        )
        xi_list.append(_parse_cov(_require_sensor(sensor, "xi_var", ctx), p_i, f"{ctx}.xi_var", square_scalar))
        nv = _parse_number(_require_sensor(sensor, "noise_var", ctx), f"{ctx}.noise_var")
        noise_var[i] = nv * nv if square_scalar else nv
        if noise_var[i] < 0:
            raise ConfigError(f"{ctx}.noise_var must be >= 0")
        kinds.append(sensor.get("noise_kind", "gaussian"))
        if kinds[-1] not in ("gaussian", "zero"):
            raise ConfigError(f"{ctx}.noise_kind must be 'gaussian' or 'zero'")
        r[i] = _parse_number(_require_sensor(sensor, "r", ctx), f"{ctx}.r")
        if r[i] <= 0:
            raise ConfigError(f"{ctx}.r must be > 0, got {r[i]}")
        P0[i] = (
            _parse_matrix(sensor["P0"], m, m, f"{ctx}.P0") if "P0" in sensor else np.eye(m)
        )
        theta_hat0[i] = (
            _parse_vector(sensor["theta_hat0"], m, f"{ctx}.theta_hat0")
            if "theta_hat0" in sensor
            else np.zeros(m)
        )

    ps = {b.shape[1] for b in B_list}
    if len(ps) != 1:
        raise ConfigError(f"sensors disagree on innovation dimension p: {sorted(ps)}")
    p = ps.pop()
    B = np.stack(B_list)
    xi_cov = np.stack(xi_list)
    if len(set(kinds)) != 1:
        raise ConfigError("all sensors must share the same noise_kind")

    theta0 = (
        _parse_vector(raw["theta0"], m, "theta0") if "theta0" in raw else np.ones(m)
    )
    delta_cov = _parse_cov(_require(raw, "delta_cov"), m, "delta_cov", square_scalar)
    Q = _parse_cov(_require(raw, "Q"), m, "Q", False)

    horizon = int(_require(raw, "horizon"))
    runs = int(_require(raw, "runs"))
    record_stride = int(raw.get("record_stride", 100))
    if horizon < 1 or runs < 1 or record_stride < 1:
        raise ConfigError("horizon, runs, and record_stride must all be >= 1")

    return ExperimentConfig(
        n=n, m=m, p=p,
        adjacency=adjacency,
        A=A, B=B, C=C, x0=x0, xi_cov=xi_cov,
        noise_var=noise_var, noise_kind=kinds[0],
        theta0=theta0, delta_cov=delta_cov,
        r=r, Q=Q, P0=P0, theta_hat0=theta_hat0,
        horizon=horizon, runs=runs, record_stride=record_stride,
        seed=int(raw.get("seed", 0)), mode=mode,
        h=int(raw.get("h", 5)), mc=int(raw.get("mc", 1000)),
        retain_traces=bool(raw.get("retain_traces", False)),
        scale_interpretation=interp,
    )


def _require_sensor(sensor: dict, key: str, ctx: str):
    if key not in sensor:
        raise ConfigError(f"{ctx}: missing required field {key!r}")
    return sensor[key]


def fig1_config(**overrides) -> ExperimentConfig:
    """The bundled three-sensor reference experiment."""
    text = resources.files("diffkf").joinpath("fig1.cfg").read_text()
    raw = yaml.safe_load(text)
    raw.update(overrides)
    return config_from_dict(raw)


def prepare_run_noise(config: ExperimentConfig, run_index: int):
    """Draw all noise arrays for one run from its dedicated streams.

    Stream layout per run: role 0 drives the parameter increments, roles
    1..n the per-sensor regressor innovations, roles n+1..2n the
    per-sensor observation noises.  Both filter modes replay the same
    arrays, so the comparison sees identical signals.
    """
    K, n, m, p = config.horizon, config.n, config.m, config.p
    from .signals import psd_factor

    delta_factor = psd_factor(config.delta_cov)
    delta_seq = (
        stream(config.seed, run_index, 0).standard_normal((K, m)) @ delta_factor.T
    )
    xi_seq = np.zeros((K, n, p))
    for i in range(n):
        xi_factor = psd_factor(config.xi_cov[i])
        xi_seq[:, i, :] = (
            stream(config.seed, run_index, 1 + i).standard_normal((K, p)) @ xi_factor.T
        )
    v_seq = np.zeros((K, n))
    if config.noise_kind == "gaussian":
        for i in range(n):
            v_seq[:, i] = stream(config.seed, run_index, 1 + n + i).normal(
                0.0, np.sqrt(config.noise_var[i]), K
            )
    return delta_seq, xi_seq, v_seq


def _record_map(config: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    ks = config.record_ks()
    record_at = np.full(config.horizon + 1, -1, dtype=np.int64)
    record_at[ks] = np.arange(ks.size)
    return ks, record_at


def simulate_one(config: ExperimentConfig, run_index: int, distributed: bool) -> np.ndarray:
    """One run through the hot kernel; returns (records, n) squared errors."""
    delta_seq, xi_seq, v_seq = prepare_run_noise(config, run_index)
    ks, record_at = _record_map(config)
    err_sq, status, step = kernels.simulate_run(
        distributed,
        config.adjacency, config.A, config.B, config.C,
        config.x0, config.theta0, config.theta_hat0, config.P0,
        config.Q, config.r,
        delta_seq, xi_seq, v_seq,
        record_at, ks.size,
    )
    if status != kernels.STATUS_OK:
        mode = "distributed" if distributed else "noncooperative"
        raise NumericalAbort(mode, run_index, step)
    return err_sq


def _simulate_chunk(config: ExperimentConfig, distributed: bool, run_indices) -> np.ndarray:
    out = np.stack([simulate_one(config, idx, distributed) for idx in run_indices])
    return out


def build_signal_simulator(config: ExperimentConfig, run_index: int) -> SignalSimulator:
    """Object-level signal source wired to the harness stream layout.

    Note the observation-noise draws come from per-sensor streams inside
    ``reference_run``; this simulator is for interactive use and
    diagnostics where a single shared noise stream is acceptable.
    """
    n = config.n
    parameter = ParameterProcess(
        config.theta0, config.delta_cov, stream(config.seed, run_index, 0)
    )
    regressors = [
        RegressorGenerator(
            config.A[i], config.B[i], config.C[i], config.x0[i], config.xi_cov[i],
            stream(config.seed, run_index, 1 + i),
        )
        for i in range(n)
    ]
    noises = [
        NoiseSpec(variance=float(config.noise_var[i]), kind=config.noise_kind)
        for i in range(n)
    ]
    return SignalSimulator(parameter, regressors, noises, stream(config.seed, run_index, 1 + n))


def reference_run(config: ExperimentConfig, run_index: int, distributed: bool) -> Trajectory:
    """Slow object-path replay of one run on the same noise arrays.

    Drives the module-level filter implementation with the exact noise the
    kernel consumes; used for trace dumps and as a cross-implementation
    oracle in tests.
    """
    from .diffusion import combine
    from .kalman import adapt

    delta_seq, xi_seq, v_seq = prepare_run_noise(config, run_index)
    K, n, m = config.horizon, config.n, config.m
    adj = config.adjacency_matrix()
    sensors = tuple(
        SensorFilterState(
            theta_hat=config.theta_hat0[i], P=config.P0[i],
            r=float(config.r[i]), Q=config.Q,
        )
        for i in range(n)
    )
    net = NetworkFilterState(k=0, sensors=sensors, adjacency=adj)

    theta = np.zeros((K + 1, m))
    theta_hat = np.zeros((K + 1, n, m))
    P = np.zeros((K + 1, n, m, m))
    theta_bar = np.zeros((K, n, m))
    P_bar = np.zeros((K, n, m, m))
    gains = np.zeros((K, n, m))
    phis = np.zeros((K, n, m))
    ys = np.zeros((K, n))
    xi_log = np.zeros(K)

    theta[0] = config.theta0
    theta_hat[0] = config.theta_hat0
    P[0] = config.P0
    x = config.x0.copy()
    th_true = config.theta0.copy()

    for k in range(K):
        phi = np.einsum("iab,ib->ia", config.C, x)
        y = phi @ th_true + v_seq[k]
        results = [adapt(net.sensors[i], phi[i], y[i]) for i in range(n)]
        if distributed:
            fused = combine(results, adj)
        else:
            fused = [(res.theta_bar, res.P_bar) for res in results]
        net = NetworkFilterState(
            k=k + 1,
            sensors=tuple(
                SensorFilterState(theta_hat=t, P=Pn, r=old.r, Q=old.Q)
                for (t, Pn), old in zip(fused, net.sensors)
            ),
            adjacency=adj,
        )
        phis[k] = phi
        ys[k] = y
        theta_bar[k] = np.stack([res.theta_bar for res in results])
        P_bar[k] = np.stack([res.P_bar for res in results])
        gains[k] = np.stack([res.gain for res in results])
        theta_hat[k + 1] = np.stack([s.theta_hat for s in net.sensors])
        P[k + 1] = np.stack([s.P for s in net.sensors])
        xi_log[k] = np.linalg.norm(v_seq[k]) + np.sqrt(n) * np.linalg.norm(delta_seq[k])
        th_true = th_true + delta_seq[k]
        theta[k + 1] = th_true
        x = np.einsum("iab,ib->ia", config.A, x) + np.einsum(
            "iap,ip->ia", config.B, xi_seq[k]
        )

    return Trajectory(
        adjacency=adj if distributed else None,
        Q=config.Q.copy(), r=config.r.copy(),
        theta=theta, theta_hat=theta_hat, P=P,
        theta_bar=theta_bar, P_bar=P_bar, gain=gains,
        phi=phis, y=ys, v=v_seq, delta=delta_seq, xi_log=xi_log,
    )


def run_monte_carlo(config: ExperimentConfig, workers: int = 1) -> RunArtifact:
    """Execute the experiment: M runs per mode, averaged at the stride.

    Runs fan out over a process pool when ``workers > 1``; per-run error
    series are assembled by run index and averaged in fixed order, so the
    result is bitwise independent of the worker count.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    ks, _ = _record_map(config)
    M = config.runs
    artifact = RunArtifact(config_hash=config.config_hash(), series={})
    for mode in config.modes():
        distributed = mode == "distributed"
        if workers == 1 or M == 1:
            err = _simulate_chunk(config, distributed, range(M))
        else:
            chunks = np.array_split(np.arange(M), workers)
            err = np.zeros((M, ks.size, config.n))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    (chunk, pool.submit(_simulate_chunk, config, distributed, list(chunk)))
                    for chunk in chunks
                    if chunk.size
                ]
                for chunk, fut in futures:
                    err[chunk] = fut.result()
        mse = err.mean(axis=0)
        if M > 1:
            stderr = err.std(axis=0, ddof=1) / np.sqrt(M)
        else:
            stderr = np.zeros_like(mse)
        artifact.series[mode] = TrackingErrorSeries(
            mode=mode, ks=ks, mse=mse, stderr=stderr, runs=M
        )
        if config.retain_traces:
            artifact.traces[mode] = reference_run(config, 0, distributed)
    return artifact


def export_csv(artifact: RunArtifact, path) -> Path:
    """Write the error series: header mode,sensor,k,mse,stderr, 17 digits."""
    path = Path(path)
    rows = []
    for mode in sorted(artifact.series):
        series = artifact.series[mode]
        n = series.mse.shape[1]
        for sensor in range(1, n + 1):
            for j, k in enumerate(series.ks):
                rows.append(
                    f"{mode},{sensor},{int(k)},"
                    f"{series.mse[j, sensor - 1]:.17g},{series.stderr[j, sensor - 1]:.17g}"
                )
    path.write_text("mode,sensor,k,mse,stderr\n" + "\n".join(rows) + "\n")
    return path


def export_trajectory_csv(traj: Trajectory, path) -> Path:
    """Per-step filter trace: k, sensor, estimate, covariance trace, error."""
    path = Path(path)
    err = traj.squared_errors()
    header = "k,sensor," + ",".join(f"theta_hat_{j + 1}" for j in range(traj.m))
    header += ",trace_P,err_sq"
    lines = [header]
    for k in range(traj.steps + 1):
        for i in range(traj.n):
            est = ",".join(f"{v:.17g}" for v in traj.theta_hat[k, i])
            lines.append(
                f"{k},{i + 1},{est},{np.trace(traj.P[k, i]):.17g},{err[k, i]:.17g}"
            )
    path.write_text("\n".join(lines) + "\n")
    return path


def export_observations_csv(traj: Trajectory, path) -> Path:
    """Per-step signal trace: k, sensor, y, regressor, true parameter."""
    path = Path(path)
    header = "k,sensor,y"
    header += "".join(f",phi_{j + 1}" for j in range(traj.m))
    header += "".join(f",theta_{j + 1}" for j in range(traj.m))
    lines = [header]
    for k in range(traj.steps):
        for i in range(traj.n):
            phi = ",".join(f"{v:.17g}" for v in traj.phi[k, i])
            theta = ",".join(f"{v:.17g}" for v in traj.theta[k])
            lines.append(f"{k},{i + 1},{traj.y[k, i]:.17g},{phi},{theta}")
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_plot(artifact: RunArtifact, path) -> list[Path]:
    """Stacked per-mode panels of MSE vs k; log-scale twin when warranted.

    The CSV is the contractual output; plotting is best-effort
    presentation.  Returns the list of written files.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    order = [m for m in ("noncooperative", "distributed") if m in artifact.series]
    written = []

    def render(log_scale: bool, target: Path) -> Path:
        fig, axes = plt.subplots(
            len(order), 1, figsize=(7, 3.2 * len(order)), squeeze=False, sharex=True
        )
        for ax, mode in zip(axes[:, 0], order):
            series = artifact.series[mode]
            for i in range(series.mse.shape[1]):
                ax.plot(series.ks, series.mse[:, i], marker="o", ms=3, label=f"sensor {i + 1}")
            ax.set_ylabel("mean squared error")
            ax.set_title(f"{mode} filter ({series.runs} runs)")
            ax.legend()
            if log_scale:
                ax.set_yscale("log")
        axes[-1, 0].set_xlabel("iteration k")
        fig.tight_layout()
        fig.savefig(target, dpi=150)
        plt.close(fig)
        return target

    written.append(render(False, path))
    values = np.concatenate([artifact.series[m].mse.ravel() for m in order])
    positive = values[values > 0]
    if positive.size and positive.max() / positive.min() > LOG_PLOT_RANGE:
        written.append(render(True, path.with_stem(path.stem + "_log")))
    return written
