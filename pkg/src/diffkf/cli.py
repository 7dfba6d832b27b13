"""Command-line interface.

Subcommands:
    simulate        run an experiment from a config file
    reproduce-fig1  run the bundled three-sensor reference experiment
    diagnose        excitation diagnostics and inequality minima
    verify          randomized property suites

Exit codes: 0 success, 2 usage, 3 validation/config failure,
4 numerical failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffkf",
        description="Diffusion Kalman filtering over sensor networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment from a config file")
    sim.add_argument("--config", required=True, help="path to a YAML experiment config")
    sim.add_argument("--out", default="out", help="output directory (default ./out)")
    sim.add_argument("--seed", type=int, default=None, help="override the master seed")
    sim.add_argument("--workers", type=int, default=1, help="Monte Carlo worker processes")
    sim.add_argument(
        "--dump-traces",
        action="store_true",
        help="also write per-step filter and signal traces of run 0 per mode",
    )
    sim.set_defaults(func=cmd_simulate)

    fig1 = sub.add_parser("reproduce-fig1", help="run the bundled reference experiment")
    fig1.add_argument("--runs", type=int, default=None, help="override Monte Carlo run count")
    fig1.add_argument("--horizon", type=int, default=None, help="override the horizon")
    fig1.add_argument("--out", default="out", help="output directory (default ./out)")
    fig1.add_argument("--seed", type=int, default=None, help="override the master seed")
    fig1.add_argument("--workers", type=int, default=1, help="Monte Carlo worker processes")
    fig1.set_defaults(func=cmd_reproduce_fig1)

    diag = sub.add_parser("diagnose", help="excitation diagnostics for a config")
    diag.add_argument("--config", required=True, help="path to a YAML experiment config")
    diag.add_argument("--h", type=int, default=None, help="excitation window length")
    diag.add_argument("--mc", type=int, default=None, help="Monte Carlo futures per estimate")
    diag.add_argument("--windows", type=int, default=8, help="number of windows to sweep")
    diag.add_argument("--reps", type=int, default=16, help="sequence replications for the decay fit")
    diag.add_argument("--out", default="out", help="output directory (default ./out)")
    diag.add_argument("--seed", type=int, default=None, help="override the master seed")
    diag.set_defaults(func=cmd_diagnose)

    ver = sub.add_parser("verify", help="run the randomized property suites")
    ver.add_argument("--instances", type=int, default=1000, help="instances per suite")
    ver.add_argument("--seed", type=int, default=0, help="suite seed")
    ver.set_defaults(func=cmd_verify)
    return parser


def _ensure_out(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_and_export(config, workers: int, out: Path, plot_name: str, dump_traces: bool) -> int:
    from . import harness

    artifact = harness.run_monte_carlo(config, workers=workers)
    csv_path = harness.export_csv(artifact, out / "errors.csv")
    plots = harness.emit_plot(artifact, out / plot_name)
    print(f"wrote {csv_path}")
    for p in plots:
        print(f"wrote {p}")
    if dump_traces:
        for mode, traj in artifact.traces.items():
            t1 = harness.export_trajectory_csv(traj, out / f"trace_{mode}.csv")
            t2 = harness.export_observations_csv(traj, out / f"signals_{mode}.csv")
            print(f"wrote {t1}")
            print(f"wrote {t2}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from . import harness

    config = harness.load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.dump_traces:
        config = replace(config, retain_traces=True)
    out = _ensure_out(args.out)
    return _run_and_export(config, args.workers, out, "errors.png", args.dump_traces)


def cmd_reproduce_fig1(args) -> int:
    from . import harness

    overrides = {}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = harness.fig1_config(**overrides)
    out = _ensure_out(args.out)
    return _run_and_export(config, args.workers, out, "fig1.png", dump_traces=False)


def cmd_diagnose(args) -> int:
    from . import harness
    from .diagnostics import run_diagnostics

    config = harness.load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    h = args.h if args.h is not None else config.h
    mc = args.mc if args.mc is not None else config.mc
    out = _ensure_out(args.out)
    report = run_diagnostics(config, h=h, mc=mc, windows=args.windows, reps=args.reps)
    print(report.summary())
    path = report.write_csv(out / "diagnostics.csv")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(instances=args.instances, seed=args.seed)
    for result in results:
        print(result.summary())
    if all(r.ok for r in results):
        print("all property suites passed")
        return EXIT_OK
    print("property suite FAILURES detected", file=sys.stderr)
    return EXIT_NUMERICAL


def main(argv=None) -> int:
    from .diffusion import CombineNumericalError
    from .graph import GraphDimensionError, InvalidGraphError
    from .harness import ConfigError, NumericalAbort
    from .signals import SignalConfigError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, InvalidGraphError, GraphDimensionError, SignalConfigError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalAbort, CombineNumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
