"""Diffusion Kalman filtering over sensor networks.

Simulation of time-varying stochastic linear regression over a sensor
network, tracked by a diffusion Kalman filter (local adapt, one
covariance-intersection combine per iteration) and by the non-cooperative
filter as a baseline, with excitation diagnostics and a reproducible
Monte Carlo harness.
"""

from ._accel import NUMBA_ENABLED
from .diffusion import (
    NetworkFilterState,
    Trajectory,
    check_error_recursions,
    combine,
    dkf_step,
    simulate,
    stacked_step,
)
from .excitation import (
    ExcitationEstimate,
    covariance_intersection_gap,
    excitation_level_network,
    excitation_level_single,
    fit_product_decay,
    fusion_sandwich_gaps,
    matrix_inversion_residual,
    normalized_gram,
    trace_bound_report,
)
from .graph import AdjacencyMatrix, diameter, kron_expand, matrix_power, min_hop_weight, validate
from .harness import (
    ExperimentConfig,
    RunArtifact,
    TrackingErrorSeries,
    export_csv,
    emit_plot,
    fig1_config,
    load_config,
    run_monte_carlo,
)
from .kalman import AdaptResult, SensorFilterState, adapt, gain, kf_step
from .signals import (
    NoiseSpec,
    ObservationRecord,
    ParameterProcess,
    RegressorGenerator,
    SignalSimulator,
    observe,
    stack,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "AdjacencyMatrix",
    "validate",
    "diameter",
    "matrix_power",
    "min_hop_weight",
    "kron_expand",
    "ParameterProcess",
    "RegressorGenerator",
    "NoiseSpec",
    "ObservationRecord",
    "SignalSimulator",
    "observe",
    "stack",
    "SensorFilterState",
    "AdaptResult",
    "adapt",
    "gain",
    "kf_step",
    "NetworkFilterState",
    "Trajectory",
    "combine",
    "dkf_step",
    "stacked_step",
    "simulate",
    "check_error_recursions",
    "ExcitationEstimate",
    "normalized_gram",
    "excitation_level_single",
    "excitation_level_network",
    "fit_product_decay",
    "trace_bound_report",
    "covariance_intersection_gap",
    "fusion_sandwich_gaps",
    "matrix_inversion_residual",
    "ExperimentConfig",
    "TrackingErrorSeries",
    "RunArtifact",
    "load_config",
    "fig1_config",
    "run_monte_carlo",
    "export_csv",
    "emit_plot",
    "__version__",
]
