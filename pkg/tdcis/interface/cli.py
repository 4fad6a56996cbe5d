"""
Command-line interface for TDCIS.

Subcommands:
    simulate   integrate one trajectory and write it as CSV
    verify     run every integrability check on the configured system
    chart      build the initial-data action-angle chart and check it
    transform  shift the chart by H(I) and fit the resulting dynamics

Exit codes: 0 pass, 1 configuration or parse error, 2 failed check or
numeric failure, 3 chart ineligible (non-compact or separatrix levels).
Machine-readable summary lines go to stdout, log messages to stderr.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from tdcis.config.settings import RunConfig, load_config, parse_config
from tdcis.core.actionangle import (
    ActionFunction,
    action_profile,
    build_initial_data_chart,
    chart_csv_text,
    chart_dynamics,
    check_canonicity,
    check_round_trip,
    evaluate_chart,
    hamiltonian_in_chart,
    shift_chart,
    transform_ww26,
)
from tdcis.core.errors import (
    ChartError,
    ConfigError,
    ExpressionError,
    NonCompactError,
    SamplingError,
    SeparatrixError,
    TDCISError,
    UnknownSystemError,
)
from tdcis.core.fields import TDSystem
from tdcis.core.flow import integrate
from tdcis.core.systems import make_system
from tdcis.core.utils import angle_difference, ensure_directory, format_real
from tdcis.core.verify import VerifyReport, all_passed, format_reports, run_suite, summary_line
from tdcis.logging.logger import configure_logger, get_logger
from tdcis.version import __version__

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED = 2
EXIT_CHART = 3


def create_parser() -> argparse.ArgumentParser:
    """Create argument parser."""
    parser = argparse.ArgumentParser(
        prog="tdcis",
        description="TDCIS - time-dependent integrable systems: flows, checks and action-angle charts",
    )

    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="tdcis.yaml", help="Config file path")
    common.add_argument("--system", help="Built-in system name (used when no config file exists)")
    common.add_argument("--seed", type=int, help="Sampling seed (overrides the config)")
    common.add_argument("--out", help="Output directory (overrides the config)")
    common.add_argument("--log-level", help="Log level (overrides the config)")
    common.add_argument("--pretty", action="store_true", help="Render reports as rich tables")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    subparsers.add_parser("simulate", parents=[common], help="Integrate a trajectory to CSV")
    subparsers.add_parser("verify", parents=[common], help="Run the integrability checks")
    subparsers.add_parser("chart", parents=[common], help="Build and check the action-angle chart")
    subparsers.add_parser("transform", parents=[common], help="Shift the chart by H(I)")

    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    if Path(args.config).exists():
        cfg = load_config(args.config)
    elif args.system:
        cfg = parse_config({"system": {"name": args.system}})
    else:
        raise ConfigError(f"Config file '{args.config}' not found (or pass --system NAME)")
    return cfg.with_overrides(seed=args.seed, out=args.out, log_level=args.log_level)


def _write(cfg: RunConfig, name: str, text: str) -> str:
    ensure_directory(cfg.output_dir)
    path = Path(cfg.output_dir) / name
    path.write_text(text, encoding="utf-8")
    print(f"WROTE {path}")
    return str(path)


def _emit(args: argparse.Namespace, reports: Sequence[VerifyReport], title: str) -> None:
    for report in reports:
        print(summary_line(report))
    if args.pretty:
        try:
            from tdcis.interface.dashboard import ReportDashboard

            ReportDashboard().show_reports(reports, title)
        except ImportError as e:
            print(f"Warning: {e}", file=sys.stderr)


def cmd_simulate(cfg: RunConfig, sys_: TDSystem, args: argparse.Namespace) -> int:  # noqa: ARG001
    """Handle simulate command."""
    traj = integrate(sys_, cfg.initial_point(), cfg.simulate.t_target, cfg.step)
    _write(cfg, "trajectory.csv", traj.to_csv_text())
    print(f"SIMULATE {sys_.label} rows={len(traj)} t_end={traj.final.t:.17g}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, sys_: TDSystem, args: argparse.Namespace) -> int:
    """Handle verify command."""
    opts = cfg.verify
    reports = run_suite(
        sys_,
        cfg.region,
        cfg.step,
        tol=opts.tolerance,
        independence_tol=opts.independence_tolerance,
        conservation_t=opts.conservation_t,
        conservation_tol=opts.conservation_tolerance,
        flow_tol=opts.flow_tolerance,
    )
    _write(cfg, "verify_report.txt", format_reports(reports))
    _emit(args, reports, f"Checks: {sys_.label}")
    return EXIT_OK if all_passed(reports) else EXIT_FAILED


def _profile_csv(cfg: RunConfig, sys_: TDSystem) -> Optional[str]:
    levels = cfg.chart.levels
    if not levels:
        return None
    rows = ["degree,level,action,period"]
    for k, f in enumerate(sys_.integrals):
        degree_field = f if sys_.m == 1 else f.restrict_to_degree(k)
        profile = action_profile(degree_field, 0.0, levels, center=sys_.centers[k])
        for level, action, period in zip(profile.levels, profile.actions, profile.periods):
            rows.append(",".join([str(k + 1)] + [format_real(v) for v in (level, action, period)]))
    return "\n".join(rows) + "\n"


def cmd_chart(cfg: RunConfig, sys_: TDSystem, args: argparse.Namespace) -> int:
    """Handle chart command."""
    opts = cfg.chart
    profile = _profile_csv(cfg, sys_)
    region = cfg.region.with_count(opts.samples)
    chart = build_initial_data_chart(
        sys_, region, cfg.step, opts.separatrix_gap, opts.max_parameter
    )
    if profile is not None:
        _write(cfg, "action_profile.csv", profile)

    reports = [
        check_round_trip(chart, region, opts.round_trip_tolerance),
        check_canonicity(chart, region, opts.tolerance),
        hamiltonian_in_chart(sys_, chart, region, opts.tolerance),
    ]
    traj = integrate(sys_, cfg.initial_point(), cfg.simulate.t_target, cfg.step)
    _write(cfg, "chart.csv", chart_csv_text(evaluate_chart(chart, traj.points)))
    _write(cfg, "chart_report.txt", format_reports(reports))
    _emit(args, reports, f"Chart: {sys_.label}")
    return EXIT_OK if all_passed(reports) else EXIT_FAILED


def cmd_transform(cfg: RunConfig, sys_: TDSystem, args: argparse.Namespace) -> int:
    """Handle transform command."""
    opts = cfg.transform
    h_of_i = ActionFunction.from_expression(opts.h_of_i, sys_.m)
    chart = build_initial_data_chart(
        sys_, cfg.region.with_count(1), cfg.step, cfg.chart.separatrix_gap, cfg.chart.max_parameter
    )
    shifted = shift_chart(chart, h_of_i)
    x0 = cfg.initial_point()
    times = [x0.t + t for t in opts.times]
    dyn = chart_dynamics(sys_, shifted, x0, times, cfg.step)

    ww26 = transform_ww26(chart, h_of_i)
    x_end = integrate(sys_, x0, times[-1], chart.ctl).final
    a, b = shifted.forward(x_end), ww26.forward(x_end)
    consistency = max(
        [abs(u - v) for u, v in zip(a.I, b.I)]
        + [abs(angle_difference(u, v)) for u, v in zip(a.phi, b.phi)]
    )

    details = {
        "h_of_i": opts.h_of_i,
        "fitted_slopes": " ".join(f"{s:.17g}" for s in dyn.angle_slopes),
        "expected_slopes": " ".join(f"{s:.17g}" for s in dyn.expected_slopes),
    }
    reports = [
        VerifyReport.from_residuals("action_drift", [dyn.action_drift], [x0], opts.tolerance),
        VerifyReport.from_residuals("angle_slope", [dyn.slope_error], [x0], opts.tolerance, details),
        VerifyReport.from_residuals("ww26_consistency", [consistency], [x0], 1e-12),
    ]
    _write(cfg, "transform.csv", dyn.to_csv_text())
    _write(cfg, "transform_report.txt", format_reports(reports))
    for k, (fitted, expected) in enumerate(zip(dyn.angle_slopes, dyn.expected_slopes)):
        print(f"SLOPE phi{k + 1} {fitted:.17g} {expected:.17g}")
    _emit(args, reports, f"Transform: {sys_.label}")
    return EXIT_OK if all_passed(reports) else EXIT_FAILED


Handler = Callable[[RunConfig, TDSystem, argparse.Namespace], int]

HANDLERS: Dict[str, Handler] = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "chart": cmd_chart,
    "transform": cmd_transform,
}


def _chart_message(error: ChartError) -> str:
    if isinstance(error, SeparatrixError):
        return f"separatrix: {error}"
    if isinstance(error, NonCompactError):
        return f"non-compact: {error}"
    return f"chart error: {error}"


def run_command(command: str, args: argparse.Namespace) -> int:
    """Load the configuration, run one command and map errors to exit codes."""
    started = time.monotonic()
    try:
        cfg = _load(args)
        configure_logger(log_path=cfg.logging.path, log_level=cfg.logging.level)
        sys_ = make_system(cfg.system)
        if sys_.m != cfg.region.m:
            raise ConfigError(
                f"region has {cfg.region.m} degrees of freedom, system '{sys_.label}' has {sys_.m}"
            )
    except (ConfigError, ExpressionError, UnknownSystemError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logger = get_logger()
    logger.log_run_start(command, sys_.label)
    try:
        code = HANDLERS[command](cfg, sys_, args)
    except (ConfigError, ExpressionError, SamplingError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        code = EXIT_CONFIG
    except ChartError as e:
        print(_chart_message(e), file=sys.stderr)
        print(f"CHART INELIGIBLE {type(e).__name__}")
        code = EXIT_CHART
    except TDCISError as e:
        logger.log_numeric_failure(command, str(e))
        print(f"Numeric failure: {e}", file=sys.stderr)
        code = EXIT_FAILED
    except OSError as e:
        print(f"Error writing output: {e}", file=sys.stderr)
        code = EXIT_CONFIG
    logger.log_run_finished(command, code, time.monotonic() - started)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI entry point.

    Args:
        argv: Command-line arguments (default: sys.argv[1:])

    Returns:
        Exit code
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    if args.command in HANDLERS:
        return run_command(args.command, args)
    print(f"Error: Unknown command '{args.command}'", file=sys.stderr)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
