import argparse
import logging
from pathlib import Path

from . import __version__
from .config import Config
from .exceptions import (
    ConfigurationError,
    OutputError,
    RandomEulerFilterError,
    ResourceLimitError,
)
from .harness import (
    LearningCurves,
    benchmark_experiment,
    run_experiment,
    sweep_experiment,
    theory_experiment,
)
from .models import ExperimentConfig, load_experiment_config, with_overrides
from .results import (
    format_curve_summary,
    format_sweep_table,
    format_theory_report,
    format_timing_table,
    write_curves,
    write_eye,
    write_table,
    write_theory_curves,
)
from .scenarios import Task

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RESOURCE = 4
EXIT_DIVERGENCE = 5
EXIT_CANCELLED = 130

COMMANDS = ("identify", "equalize", "theory", "sweep", "bench")


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", required=True, type=Path, help="Experiment JSON file or sidecar."
    )
    common.add_argument(
        "--out",
        type=Path,
        default=Path("results"),
        help="Output directory (default: results).",
    )
    common.add_argument("--seed", type=int, help="Override run.master_seed.")
    common.add_argument("--runs", type=int, help="Override run.run_count.")
    common.add_argument(
        "--workers",
        type=int,
        help="Worker processes for Monte Carlo runs (default: RECF_WORKERS or 1).",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument(
        "--quiet", action="store_true", help="Only print warnings and errors."
    )
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="Enable debug logging."
    )

    parser = argparse.ArgumentParser(
        prog="random-euler-filters",
        description=(
            "Run random Euler feature adaptive-filter experiments and their "
            "mean-square convergence theory."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "identify": "Nonlinear system identification learning curves.",
        "equalize": "Channel equalization learning curves and symbol error rates.",
        "theory": "Predicted versus simulated curves on the random-walk model.",
        "sweep": "Steady-state MSE across one parameter's values.",
        "bench": "Per-update cost of each configured filter.",
    }
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=helps[command])
    return parser.parse_args(argv)


def _configure_logging(args: argparse.Namespace, settings: Config) -> None:
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    else:
        level = logging.getLevelNamesMapping()[settings.log_level]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def _load(args: argparse.Namespace) -> ExperimentConfig:
    cfg = with_overrides(load_experiment_config(args.config), args.seed, args.runs)
    expected = Task.EQUALIZE if args.command == "equalize" else Task.IDENTIFY
    if args.command in ("identify", "equalize") and cfg.scenario.task is not expected:
        raise ConfigurationError(
            f"{args.config}: scenario.task is {cfg.scenario.task.value!r}, "
            f"the {args.command} command needs {expected.value!r}"
        )
    return cfg


def _output(args: argparse.Namespace, suffix: str = ".csv") -> Path:
    return args.out / f"{args.command}_{args.config.stem}{suffix}"


def _divergence_exceeded(curves: LearningCurves) -> list[str]:
    limit = curves.config.run.max_divergence_fraction
    run_count = curves.config.run.run_count
    return [
        name
        for name, count in curves.divergence_counts().items()
        if count / run_count > limit
    ]


def _say(args: argparse.Namespace, message: str) -> None:
    if not args.quiet:
        print(message)


def _run_curves(args: argparse.Namespace, cfg: ExperimentConfig, settings: Config) -> int:
    curves = run_experiment(cfg, settings.workers, settings.cklms_max_dictionary)
    csv_path = write_curves(curves, _output(args))
    _say(args, format_curve_summary(curves))
    _say(args, f"Curves written to {csv_path}")
    if cfg.scenario.task is Task.EQUALIZE:
        eye_path = write_eye(curves, _output(args, "_eye.csv"))
        if eye_path is not None:
            _say(args, f"Eye samples written to {eye_path}")

    exceeded = _divergence_exceeded(curves)
    if exceeded:
        print(
            f"Divergence threshold exceeded for {', '.join(exceeded)} "
            f"(more than {cfg.run.max_divergence_fraction:g} of runs diverged)."
        )
        return EXIT_DIVERGENCE
    return EXIT_OK


def _run_theory(args: argparse.Namespace, cfg: ExperimentConfig, settings: Config) -> int:
    report = theory_experiment(cfg, settings.workers, settings.max_theory_dim)
    csv_path = write_theory_curves(report, cfg, _output(args))
    _say(args, format_theory_report(report))
    _say(args, f"Predicted and simulated curves written to {csv_path}")
    return EXIT_OK


def _run_sweep(args: argparse.Namespace, cfg: ExperimentConfig, settings: Config) -> int:
    rows = sweep_experiment(cfg, settings.workers, settings.max_theory_dim)
    table_path = write_table(
        _output(args),
        (rows[0].parameter, "simulated_mse", "simulated_emse", "predicted_mse"),
        [
            (row.value, row.simulated_mse, row.simulated_emse, row.predicted_mse)
            for row in rows
        ],
    )
    _say(args, format_sweep_table(rows))
    _say(args, f"Sweep table written to {table_path}")
    return EXIT_OK


def _run_bench(args: argparse.Namespace, cfg: ExperimentConfig, settings: Config) -> int:
    results = benchmark_experiment(cfg, settings.cklms_max_dictionary)
    table_path = write_table(
        _output(args),
        ("filter", "total_seconds", "mean_update_seconds", "growth_exponent", "updates"),
        [
            (r.name, r.total_seconds, r.mean_update_seconds, r.growth_exponent, r.updates)
            for r in results
        ],
    )
    _say(args, format_timing_table(results))
    _say(args, f"Timing table written to {table_path}")
    return EXIT_OK


HANDLERS = {
    "identify": _run_curves,
    "equalize": _run_curves,
    "theory": _run_theory,
    "sweep": _run_sweep,
    "bench": _run_bench,
}


def _run(argv: list[str] | None = None) -> int:
    """Run one subcommand and return a process exit code."""
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help/--version.
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    settings = Config.from_env()
    _configure_logging(args, settings)
    if args.workers is not None:
        if args.workers < 1:
            print("--workers must be >= 1")
            return EXIT_USAGE
        settings.workers = args.workers

    try:
        cfg = _load(args)
        _say(args, f"random-euler-filters v{__version__}: {args.command} {args.config}")
        return HANDLERS[args.command](args, cfg, settings)
    except ConfigurationError as exc:
        logger.error("Configuration error: %s", exc)
        print(f"Invalid configuration: {exc}")
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        logger.error("Resource limit: %s", exc)
        print(f"{exc}. Raise RECF_MAX_THEORY_DIM or theory.max_dim to allow it.")
        return EXIT_RESOURCE
    except OutputError as exc:
        logger.error("Could not write results: %s", exc)
        print(f"Could not write results: {exc}")
        return EXIT_FAILURE
    except RandomEulerFilterError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"{args.command} failed: {exc}")
        return EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    """Run the CLI with clean handling for terminal cancellation."""
    try:
        return _run(argv)
    except KeyboardInterrupt:
        print("\nOperation cancelled.")
        return EXIT_CANCELLED


if __name__ == "__main__":
    raise SystemExit(main())
