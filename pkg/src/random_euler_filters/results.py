"""CSV curve files, JSON sidecar records and plain-text result tables."""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from . import __version__
from .exceptions import OutputError
from .harness import (
    FilterCurves,
    LearningCurves,
    SweepRow,
    TheoryReport,
    TimingResult,
    curves_from_prediction,
    feature_map_records,
    to_db,
)
from .models import ExperimentConfig, experiment_config_to_dict

logger = logging.getLogger(__name__)

CURVE_HEADER = ("iteration", "filter", "mse_db", "emse_db", "msd_db")


def format_float(value: float) -> str:
    """Shortest decimal that parses back to the same double."""
    return repr(float(value))


def _curve_rows(curves: Iterable[FilterCurves]) -> Iterable[list[str]]:
    for curve in curves:
        mse_db = curve.mse_db
        emse_db = curve.emse_db
        msd_db = curve.msd_db
        for i in range(len(mse_db)):
            yield [
                str(i + 1),
                curve.name,
                format_float(mse_db[i]),
                format_float(emse_db[i]),
                "" if msd_db is None else format_float(msd_db[i]),
            ]


def sidecar_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def _write(path: Path, write: Any) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            write(handle)
    except OSError as exc:
        raise OutputError(exc.strerror or str(exc), str(path)) from exc


def _write_curve_csv(path: Path, curves: Sequence[FilterCurves]) -> None:
    def write(handle: Any) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        writer.writerows(_curve_rows(curves))

    _write(path, write)
    logger.debug("Wrote %d curves to %s", len(curves), path)


def _write_json(path: Path, record: dict[str, Any]) -> None:
    def write(handle: Any) -> None:
        json.dump(record, handle, indent=2, sort_keys=True, allow_nan=True)
        handle.write("\n")

    _write(path, write)


def _base_record(cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "version": __version__,
        "config": experiment_config_to_dict(cfg),
        "seeds": {
            "master_seed": cfg.run.master_seed,
            "run_count": cfg.run.run_count,
            "derivation": "SeedSequence([master_seed, run_index, stream])",
        },
        "feature_maps": feature_map_records(cfg),
    }


def write_curves(curves: LearningCurves, path: str | Path) -> Path:
    """Write the learning-curve CSV and its replay sidecar; returns the CSV path.

    The sidecar shares the CSV's basename and embeds the resolved config, so
    ``--config <sidecar>`` replays the experiment byte for byte.
    """
    csv_path = Path(path)
    _write_curve_csv(csv_path, list(curves.filters.values()))
    record = _base_record(curves.config)
    record["stream_checksums"] = curves.stream_checksums
    record["sigma_v2"] = curves.sigma_v2
    record["filters"] = {
        name: {
            "kind": curve.kind,
            "runs_used": curve.runs_used,
            "diverged_runs": curve.diverged_runs,
            "ser": None if curve.symbols is None else curve.symbols.ser,
        }
        for name, curve in curves.filters.items()
    }
    _write_json(sidecar_path(csv_path), record)
    return csv_path


def write_theory_curves(
    report: TheoryReport, cfg: ExperimentConfig, path: str | Path
) -> Path:
    """Predicted and simulated curves per step-size in the learning-curve schema."""
    csv_path = Path(path)
    curves = []
    steady = []
    for run in report.runs:
        label = f"{run.simulated.name} mu={format_float(run.mu)}"
        curves.append(curves_from_prediction(f"{label} theory", run.prediction))
        curves.append(_relabel(run.simulated, f"{label} simulated"))
        entry: dict[str, Any] = {
            "mu": run.mu,
            "spectral_radius": run.prediction.spectral_radius,
        }
        if run.prediction.steady is not None:
            entry.update(run.prediction.steady._asdict())
        steady.append(entry)
    _write_curve_csv(csv_path, curves)

    record = _base_record(cfg)
    record["theory"] = {
        "dim": report.moments.dim,
        "n_samples": report.moments.n_samples,
        "moment_seed": report.moments.seed,
        "sigma_v2": report.sigma_v2,
        "sigma_q2": report.sigma_q2,
        "steady_state": steady,
        "mu_opt": report.mu_opt,
        "mse_min": report.mse_min,
    }
    _write_json(sidecar_path(csv_path), record)
    return csv_path


def _relabel(curve: FilterCurves, name: str) -> FilterCurves:
    return FilterCurves(
        name,
        curve.kind,
        curve.mse,
        curve.emse,
        curve.msd,
        curve.runs_used,
        curve.diverged_runs,
        curve.symbols,
    )


def write_eye(curves: LearningCurves, path: str | Path) -> Path | None:
    """Dump the frozen-weight equalizer outputs of the first run, per filter."""
    rows = [
        [name, format_float(point[0]), format_float(point[1])]
        for name, curve in curves.filters.items()
        if curve.symbols is not None
        for point in curve.symbols.eye
    ]
    if not rows:
        return None
    eye_path = Path(path)

    def write(handle: Any) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("filter", "real", "imag"))
        writer.writerows(rows)

    _write(eye_path, write)
    return eye_path


def write_table(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> Path:
    table_path = Path(path)

    def write(handle: Any) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(
            [
                format_float(cell) if isinstance(cell, float) else cell
                for cell in row
            ]
            for row in rows
        )

    _write(table_path, write)
    return table_path


def _render(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [
        max(len(header[i]), *(len(row[i]) for row in rows)) if rows else len(header[i])
        for i in range(len(header))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths, strict=True))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths, strict=True))
        for row in rows
    )
    return "\n".join(lines)


def _db(value: float | None) -> str:
    if value is None:
        return "-"
    return f"{float(to_db(value)):.2f}"


def format_curve_summary(curves: LearningCurves) -> str:
    """Steady-state (tail-averaged) levels per filter, in dB."""
    fraction = curves.config.run.tail_fraction
    rows = []
    for name, curve in curves.filters.items():
        msd = curve.tail_mean("msd", fraction) if curve.msd is not None else None
        rows.append(
            [
                name,
                _db(curve.tail_mean("mse", fraction)),
                _db(curve.tail_mean("emse", fraction)),
                _db(msd),
                f"{curve.runs_used}/{curve.runs_used + len(curve.diverged_runs)}",
                "-" if curve.symbols is None else f"{curve.symbols.ser:.4g}",
            ]
        )
    return _render(("filter", "MSE dB", "EMSE dB", "MSD dB", "runs", "SER"), rows)


def format_theory_report(report: TheoryReport) -> str:
    rows = []
    for run in report.runs:
        steady = run.prediction.steady
        rows.append(
            [
                f"{run.mu:g}",
                f"{run.prediction.spectral_radius:.6f}",
                _db(None if steady is None else steady.mse),
                _db(run.simulated.tail_mean("mse")),
                _db(None if steady is None else steady.msd),
                _db(run.simulated.tail_mean("msd")),
            ]
        )
    table = _render(
        ("mu", "radius", "MSE theory", "MSE sim", "MSD theory", "MSD sim"), rows
    )
    if report.mu_opt is not None and report.mse_min is not None:
        table += (
            f"\nmu_opt = {report.mu_opt:.6g}, "
            f"minimum MSE = {report.mse_min:.6g} ({_db(report.mse_min)} dB)"
        )
    return table


def format_sweep_table(rows: Sequence[SweepRow]) -> str:
    parameter = rows[0].parameter if rows else "value"
    return _render(
        (parameter, "MSE sim dB", "EMSE sim dB", "MSE theory dB"),
        [
            [f"{row.value:g}", _db(row.simulated_mse), _db(row.simulated_emse), _db(row.predicted_mse)]
            for row in rows
        ],
    )


def format_timing_table(results: Sequence[TimingResult]) -> str:
    if not results:
        return "no samples timed"
    return _render(
        ("filter", "total s", "per update us", "growth exponent", "updates"),
        [
            [
                r.name,
                f"{r.total_seconds:.4f}",
                f"{r.mean_update_seconds * 1e6:.2f}",
                f"{r.growth_exponent:.3f}",
                str(r.updates),
            ]
            for r in results
        ],
    )
