"""Typed experiment configuration and its JSON validation."""

import json
from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path
from typing import Any, cast

from .exceptions import ConfigurationError, ConfigValidationError, RandomEulerFilterError
from .filters import FilterKind
from .scenarios import (
    NoiseMode,
    NoiseSpec,
    PlantKind,
    PlantSpec,
    Scenario,
    SourceKind,
    SourceSpec,
    Task,
)


_DEFAULT_SOURCE = SourceSpec()
_DEFAULT_PLANT = PlantSpec()
_DEFAULT_NOISE = NoiseSpec()


class InitialWeights(StrEnum):
    ZEROS = "zeros"
    ONES = "ones"


class SweepParameter(StrEnum):
    MU = "mu"
    NUM_FEATURES = "num_features"
    SIGMA2 = "sigma2"


@dataclass(frozen=True, slots=True)
class FilterConfig:
    kind: FilterKind
    mu: float
    num_features: int = 500
    sigma2: float = 1.0
    kernel_sigma2: float | None = None
    initial: InitialWeights = InitialWeights.ZEROS
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or self.kind.value.upper()

    @property
    def uses_feature_map(self) -> bool:
        return self.kind in (FilterKind.LRECF, FilterKind.WLRECF)


@dataclass(frozen=True, slots=True)
class RunConfig:
    run_count: int = 200
    sample_count: int = 5000
    test_count: int = 300_000
    master_seed: int = 0
    resample_feature_map: bool = True
    resample_plant: bool = True
    tail_fraction: float = 0.1
    max_divergence_fraction: float = 0.5


@dataclass(frozen=True, slots=True)
class TheoryConfig:
    n_samples: int = 100_000
    seed: int = 0
    step_sizes: tuple[float, ...] = ()
    max_dim: int | None = None
    n_steps: int | None = None


@dataclass(frozen=True, slots=True)
class SweepConfig:
    parameter: SweepParameter = SweepParameter.MU
    values: tuple[float, ...] = ()


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    """Scenario, filters and run settings for one experiment."""

    scenario: Scenario
    filters: tuple[FilterConfig, ...]
    run: RunConfig = field(default_factory=RunConfig)
    theory: TheoryConfig | None = None
    sweep: SweepConfig | None = None


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _section(raw: object, path: str, allowed: tuple[str, ...]) -> dict[str, object]:
    if not isinstance(raw, dict):
        raise ConfigValidationError("expected an object", path)
    section = cast(dict[str, object], raw)
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigValidationError(f"unknown keys {unknown}", path)
    return section


def _number(
    raw: dict[str, object],
    key: str,
    path: str,
    default: float | None,
    minimum: float | None = None,
    strict: bool = False,
) -> float:
    value = raw.get(key, default)
    if value is None:
        raise ConfigValidationError("is required", _join(path, key))
    if not isinstance(value, int | float) or isinstance(value, bool):
        raise ConfigValidationError("must be a number", _join(path, key))
    if minimum is not None and (value <= minimum if strict else value < minimum):
        relation = ">" if strict else ">="
        raise ConfigValidationError(f"must be {relation} {minimum}", _join(path, key))
    return float(value)


def _integer(
    raw: dict[str, object],
    key: str,
    path: str,
    default: int | None,
    minimum: int = 0,
) -> int:
    value = raw.get(key, default)
    if value is None:
        raise ConfigValidationError("is required", _join(path, key))
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigValidationError("must be an integer", _join(path, key))
    if value < minimum:
        raise ConfigValidationError(f"must be >= {minimum}", _join(path, key))
    return value


def _boolean(raw: dict[str, object], key: str, path: str, default: bool) -> bool:
    value = raw.get(key, default)
    if not isinstance(value, bool):
        raise ConfigValidationError("must be true or false", _join(path, key))
    return value


def _choice[E: StrEnum](
    raw: dict[str, object], key: str, path: str, enum: type[E], default: E
) -> E:
    value = raw.get(key, default.value)
    try:
        return enum(value)
    except ValueError as exc:
        choices = ", ".join(member.value for member in enum)
        raise ConfigValidationError(
            f"must be one of {choices}, got {value!r}", _join(path, key)
        ) from exc


def _numbers(raw: dict[str, object], key: str, path: str) -> tuple[float, ...]:
    value = raw.get(key, [])
    if not isinstance(value, list) or not all(
        isinstance(item, int | float) and not isinstance(item, bool) for item in value
    ):
        raise ConfigValidationError("must be a list of numbers", _join(path, key))
    return tuple(float(item) for item in value)


def _parse_scenario(raw: object, delay: int) -> Scenario:
    section = _section(raw, "scenario", ("task", "m", "source", "plant", "noise"))
    source_raw = _section(
        section.get("source", {}), "scenario.source", ("kind", "rho", "probabilities")
    )
    plant_raw = _section(
        section.get("plant", {}),
        "scenario.plant",
        ("kind", "num_features", "sigma2", "sigma_q2", "augmented", "w_opt_scale"),
    )
    noise_raw = _section(section.get("noise", {}), "scenario.noise", ("mode", "value"))

    probabilities = _numbers(source_raw, "probabilities", "scenario.source")
    source = SourceSpec(
        kind=_choice(
            source_raw, "kind", "scenario.source", SourceKind, SourceKind.NONCIRCULAR_GAUSSIAN
        ),
        rho=_number(source_raw, "rho", "scenario.source", _DEFAULT_SOURCE.rho, minimum=0.0),
        probabilities=cast(tuple[float, float, float, float], probabilities)
        if probabilities
        else _DEFAULT_SOURCE.probabilities,
    )
    plant = PlantSpec(
        kind=_choice(plant_raw, "kind", "scenario.plant", PlantKind, PlantKind.SYSTEM_I),
        num_features=_integer(
            plant_raw, "num_features", "scenario.plant", _DEFAULT_PLANT.num_features, 1
        ),
        sigma2=_number(
            plant_raw, "sigma2", "scenario.plant", _DEFAULT_PLANT.sigma2, 0.0, strict=True
        ),
        sigma_q2=_number(plant_raw, "sigma_q2", "scenario.plant", 0.0, minimum=0.0),
        augmented=_boolean(plant_raw, "augmented", "scenario.plant", True),
        w_opt_scale=_number(
            plant_raw, "w_opt_scale", "scenario.plant", 1.0, 0.0, strict=True
        ),
    )
    noise = NoiseSpec(
        mode=_choice(noise_raw, "mode", "scenario.noise", NoiseMode, NoiseMode.SNR_DB),
        value=_number(noise_raw, "value", "scenario.noise", _DEFAULT_NOISE.value),
    )
    return Scenario(
        m=_integer(section, "m", "scenario", None, 1),
        source=source,
        plant=plant,
        noise=noise,
        task=_choice(section, "task", "scenario", Task, Task.IDENTIFY),
        delay=delay,
    )


def _parse_filter(raw: object, path: str) -> FilterConfig:
    section = _section(
        raw,
        path,
        ("kind", "mu", "num_features", "sigma2", "kernel_sigma2", "initial", "label"),
    )
    if "kind" not in section:
        raise ConfigValidationError("is required", _join(path, "kind"))
    kernel_sigma2 = section.get("kernel_sigma2")
    label = section.get("label", "")
    if not isinstance(label, str):
        raise ConfigValidationError("must be a string", _join(path, "label"))
    return FilterConfig(
        kind=_choice(section, "kind", path, FilterKind, FilterKind.WLRECF),
        mu=_number(section, "mu", path, None, 0.0, strict=True),
        num_features=_integer(section, "num_features", path, 500, 1),
        sigma2=_number(section, "sigma2", path, 1.0, 0.0, strict=True),
        kernel_sigma2=None
        if kernel_sigma2 is None
        else _number(section, "kernel_sigma2", path, None, 0.0, strict=True),
        initial=_choice(section, "initial", path, InitialWeights, InitialWeights.ZEROS),
        label=label,
    )


def parse_experiment_config(raw: object) -> ExperimentConfig:
    """Validate a decoded JSON document into an :class:`ExperimentConfig`."""
    document = _section(raw, "", ("scenario", "filters", "run", "theory", "sweep"))
    run_raw = _section(
        document.get("run", {}),
        "run",
        (
            "run_count",
            "sample_count",
            "delay",
            "test_count",
            "master_seed",
            "resample_feature_map",
            "resample_plant",
            "tail_fraction",
            "max_divergence_fraction",
        ),
    )
    defaults = RunConfig()
    run = RunConfig(
        run_count=_integer(run_raw, "run_count", "run", defaults.run_count, 1),
        sample_count=_integer(run_raw, "sample_count", "run", defaults.sample_count, 1),
        test_count=_integer(run_raw, "test_count", "run", defaults.test_count, 1),
        master_seed=_integer(run_raw, "master_seed", "run", defaults.master_seed, 0),
        resample_feature_map=_boolean(
            run_raw, "resample_feature_map", "run", defaults.resample_feature_map
        ),
        resample_plant=_boolean(run_raw, "resample_plant", "run", defaults.resample_plant),
        tail_fraction=_number(
            run_raw, "tail_fraction", "run", defaults.tail_fraction, 0.0, strict=True
        ),
        max_divergence_fraction=_number(
            run_raw,
            "max_divergence_fraction",
            "run",
            defaults.max_divergence_fraction,
            0.0,
        ),
    )
    if run.tail_fraction > 1 or run.max_divergence_fraction > 1:
        raise ConfigValidationError("fractions must not exceed 1", "run")

    if "scenario" not in document:
        raise ConfigValidationError("is required", "scenario")
    try:
        scenario = _parse_scenario(
            document["scenario"], _integer(run_raw, "delay", "run", 0, 0)
        )
    except RandomEulerFilterError as exc:
        if isinstance(exc, ConfigValidationError):
            raise
        raise ConfigValidationError(str(exc), "scenario") from exc

    filters_raw = document.get("filters")
    if not isinstance(filters_raw, list) or not filters_raw:
        raise ConfigValidationError("must be a non-empty list", "filters")
    filters = tuple(
        _parse_filter(item, f"filters[{index}]") for index, item in enumerate(filters_raw)
    )

    theory = None
    if "theory" in document:
        theory_raw = _section(
            document["theory"],
            "theory",
            ("n_samples", "seed", "step_sizes", "max_dim", "n_steps"),
        )
        step_sizes = _numbers(theory_raw, "step_sizes", "theory")
        if any(mu <= 0 for mu in step_sizes):
            raise ConfigValidationError("must be positive", "theory.step_sizes")
        theory = TheoryConfig(
            n_samples=_integer(theory_raw, "n_samples", "theory", 100_000, 1),
            seed=_integer(theory_raw, "seed", "theory", 0, 0),
            step_sizes=step_sizes,
            max_dim=None
            if theory_raw.get("max_dim") is None
            else _integer(theory_raw, "max_dim", "theory", None, 1),
            n_steps=None
            if theory_raw.get("n_steps") is None
            else _integer(theory_raw, "n_steps", "theory", None, 1),
        )

    sweep = None
    if "sweep" in document:
        sweep_raw = _section(document["sweep"], "sweep", ("parameter", "values"))
        values = _numbers(sweep_raw, "values", "sweep")
        if not values or any(value <= 0 for value in values):
            raise ConfigValidationError("must be a non-empty list of positive numbers", "sweep.values")
        parameter = _choice(sweep_raw, "parameter", "sweep", SweepParameter, SweepParameter.MU)
        if parameter is SweepParameter.NUM_FEATURES and any(
            value != int(value) for value in values
        ):
            raise ConfigValidationError("num_features values must be integers", "sweep.values")
        sweep = SweepConfig(parameter=parameter, values=values)

    return ExperimentConfig(scenario, filters, run, theory, sweep)


def experiment_config_to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    """Fully resolved JSON-compatible form; parsing it gives back ``cfg``."""
    scenario = cfg.scenario
    document: dict[str, Any] = {
        "scenario": {
            "task": scenario.task.value,
            "m": scenario.m,
            "source": {
                "kind": scenario.source.kind.value,
                "rho": scenario.source.rho,
                "probabilities": list(scenario.source.probabilities),
            },
            "plant": {
                "kind": scenario.plant.kind.value,
                "num_features": scenario.plant.num_features,
                "sigma2": scenario.plant.sigma2,
                "sigma_q2": scenario.plant.sigma_q2,
                "augmented": scenario.plant.augmented,
                "w_opt_scale": scenario.plant.w_opt_scale,
            },
            "noise": {"mode": scenario.noise.mode.value, "value": scenario.noise.value},
        },
        "filters": [
            {
                "kind": spec.kind.value,
                "mu": spec.mu,
                "num_features": spec.num_features,
                "sigma2": spec.sigma2,
                "kernel_sigma2": spec.kernel_sigma2,
                "initial": spec.initial.value,
                "label": spec.label,
            }
            for spec in cfg.filters
        ],
        "run": {
            "run_count": cfg.run.run_count,
            "sample_count": cfg.run.sample_count,
            "delay": scenario.delay,
            "test_count": cfg.run.test_count,
            "master_seed": cfg.run.master_seed,
            "resample_feature_map": cfg.run.resample_feature_map,
            "resample_plant": cfg.run.resample_plant,
            "tail_fraction": cfg.run.tail_fraction,
            "max_divergence_fraction": cfg.run.max_divergence_fraction,
        },
    }
    if cfg.theory is not None:
        document["theory"] = {
            "n_samples": cfg.theory.n_samples,
            "seed": cfg.theory.seed,
            "step_sizes": list(cfg.theory.step_sizes),
            "max_dim": cfg.theory.max_dim,
            "n_steps": cfg.theory.n_steps,
        }
    if cfg.sweep is not None:
        document["sweep"] = {
            "parameter": cfg.sweep.parameter.value,
            "values": list(cfg.sweep.values),
        }
    return document


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read a config file, or the ``config`` section of a replay sidecar."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"config file not found: {config_path}")
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read config file {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigValidationError(
            f"invalid JSON in {config_path}: {exc.msg} (line {exc.lineno})"
        ) from exc
    if isinstance(raw, dict) and "config" in raw and "scenario" not in raw:
        raw = raw["config"]
    return parse_experiment_config(raw)


def with_overrides(
    cfg: ExperimentConfig, seed: int | None = None, runs: int | None = None
) -> ExperimentConfig:
    """Apply command-line overrides for the master seed and run count."""
    run = cfg.run
    if seed is not None:
        if seed < 0:
            raise ConfigValidationError("must be >= 0", "run.master_seed")
        run = replace(run, master_seed=seed)
    if runs is not None:
        if runs < 1:
            raise ConfigValidationError("must be >= 1", "run.run_count")
        run = replace(run, run_count=runs)
    return replace(cfg, run=run)
