"""Monte Carlo experiment runner.

Every run derives its seeds from ``(master_seed, run_index)``, all filters of a run
consume the same stream, and run results are reduced in run order. Curves are
therefore bit-identical for a given config whatever the worker count.
"""

import logging
import time
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import scipy.optimize
from numpy.typing import ArrayLike, NDArray

from .config import DEFAULT_CKLMS_MAX_DICTIONARY, DEFAULT_MAX_THEORY_DIM
from .exceptions import (
    ConfigurationError,
    DivergenceError,
    InvalidParameterError,
)
from .feature_map import EulerFeatureMap, create_map
from .filters import AdaptiveFilter, FilterKind, create_filter
from .models import (
    ExperimentConfig,
    FilterConfig,
    InitialWeights,
    SweepParameter,
)
from .scenarios import (
    QPSK_SYMBOLS,
    NoiseMode,
    Scenario,
    SignalStream,
    Task,
    random_plant_weights,
)
from .theory import (
    Moments,
    TheoryPrediction,
    estimate_moments,
    initial_covariance,
    optimal_step_size,
    steady_state,
    transient_predict,
)

logger = logging.getLogger(__name__)

# Stream identifiers mixed into seed sequences. Frozen streams use a run slot
# no run index can reach.
_STREAM, _FEATURE_MAP, _PLANT, _TEST = 0, 1, 2, 3
_FROZEN_RUN = 2**32 - 1
EYE_SAMPLE_LIMIT = 2000
# Relative growth of the block-mean update cost below which it counts as flat.
FLAT_GROWTH = 0.25
MAX_GROWTH_EXPONENT = 3.0


def to_db(values: ArrayLike) -> NDArray[np.float64]:
    """``10 log10`` of a power quantity."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(values, dtype=np.float64))


def _seed(master_seed: int, *key: int) -> int:
    entropy = np.random.SeedSequence([master_seed, *key]).generate_state(2)
    return int(entropy[0]) << 32 | int(entropy[1])


@dataclass(frozen=True, slots=True)
class RunSeeds:
    """Seeds for one run, derived from the master seed and the run index."""

    stream: np.random.SeedSequence
    test: np.random.SeedSequence
    feature_map: int
    plant: int

    @classmethod
    def derive(cls, cfg: ExperimentConfig, run_index: int) -> "RunSeeds":
        master = cfg.run.master_seed
        map_run = run_index if cfg.run.resample_feature_map else _FROZEN_RUN
        plant_run = run_index if cfg.run.resample_plant else _FROZEN_RUN
        return cls(
            stream=np.random.SeedSequence([master, run_index, _STREAM]),
            test=np.random.SeedSequence([master, run_index, _TEST]),
            feature_map=_seed(master, map_run, _FEATURE_MAP),
            plant=_seed(master, plant_run, _PLANT),
        )


class FeatureMaps:
    """Per-run cache so filters with equal map parameters share one map."""

    def __init__(self, m: int, seed: int) -> None:
        self.m = m
        self.seed = seed
        self._maps: dict[tuple[int, float], EulerFeatureMap] = {}

    def get(self, num_features: int, sigma2: float) -> EulerFeatureMap:
        key = (num_features, sigma2)
        if key not in self._maps:
            self._maps[key] = create_map(self.m, num_features, sigma2, self.seed)
        return self._maps[key]

    def records(self) -> list[dict[str, Any]]:
        """Rebuildable records of the maps drawn so far, in first-use order."""
        return [fm.to_record() for fm in self._maps.values()]


def feature_map_records(cfg: ExperimentConfig, run_index: int = 0) -> list[dict[str, Any]]:
    """Records of every feature map used in run ``run_index``, plant map first."""
    scenario = cfg.scenario
    maps = FeatureMaps(scenario.m, RunSeeds.derive(cfg, run_index).feature_map)
    if scenario.is_random_walk:
        maps.get(scenario.plant.num_features, scenario.plant.sigma2)
    for spec in cfg.filters:
        if spec.uses_feature_map:
            maps.get(spec.num_features, spec.sigma2)
    return maps.records()


def plant_initial_weights(cfg: ExperimentConfig, seeds: RunSeeds) -> NDArray[np.complex128]:
    plant = cfg.scenario.plant
    length = plant.num_features * (2 if plant.augmented else 1)
    return random_plant_weights(
        length, plant.w_opt_scale, np.random.default_rng(seeds.plant)
    )


def initial_weights(spec: FilterConfig, m: int) -> NDArray[np.complex128] | None:
    if spec.initial is InitialWeights.ZEROS or spec.kind is FilterKind.CKLMS:
        return None
    length = {
        FilterKind.CLMS: m,
        FilterKind.LRECF: spec.num_features,
        FilterKind.WLRECF: 2 * spec.num_features,
    }[spec.kind]
    return np.ones(length, dtype=np.complex128)


def build_filter(
    spec: FilterConfig,
    scenario: Scenario,
    maps: FeatureMaps,
    max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY,
) -> AdaptiveFilter:
    feature_map = maps.get(spec.num_features, spec.sigma2) if spec.uses_feature_map else None
    return create_filter(
        spec.kind,
        spec.mu,
        scenario.m,
        feature_map=feature_map,
        init=initial_weights(spec, scenario.m),
        kernel_sigma2=spec.kernel_sigma2 if spec.kernel_sigma2 else spec.sigma2,
        max_dictionary=max_dictionary,
    )


def tracks_plant(spec: FilterConfig, scenario: Scenario) -> bool:
    """Whether the filter's weights live in the random-walk plant's weight space."""
    plant = scenario.plant
    return (
        scenario.is_random_walk
        and spec.uses_feature_map
        and (spec.num_features, spec.sigma2) == (plant.num_features, plant.sigma2)
        and (spec.kind is FilterKind.WLRECF) == plant.augmented
    )


@dataclass(frozen=True, slots=True)
class SymbolErrorReport:
    ser: float
    errors: int
    count: int
    eye: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 2)))


def decide_symbols(
    estimates: ArrayLike, constellation: NDArray[np.complex128] = QPSK_SYMBOLS
) -> NDArray[np.complex128]:
    """Nearest constellation point; ties go to the earliest point in order."""
    values = np.asarray(estimates, dtype=np.complex128)
    distances = np.abs(values[:, None] - constellation[None, :])
    return constellation[np.argmin(distances, axis=1)]


def symbol_error_rate(
    estimates: ArrayLike,
    symbols: ArrayLike,
    constellation: NDArray[np.complex128] = QPSK_SYMBOLS,
    eye_samples: int = 0,
) -> SymbolErrorReport:
    """Symbol error rate of nearest-symbol decisions plus an optional eye dump."""
    values = np.asarray(estimates, dtype=np.complex128)
    truth = np.asarray(symbols, dtype=np.complex128)
    if values.size == 0:
        raise InvalidParameterError("cannot compute a symbol error rate on no symbols")
    if values.shape != truth.shape:
        raise InvalidParameterError("estimates and symbols must have equal length")
    errors = int(np.count_nonzero(decide_symbols(values, constellation) != truth))
    eye = np.column_stack((values.real, values.imag))[:eye_samples]
    return SymbolErrorReport(errors / values.size, errors, values.size, eye)


@dataclass(slots=True)
class _FilterRun:
    mse: NDArray[np.float64]
    emse: NDArray[np.float64]
    msd: NDArray[np.float64] | None
    diverged_at: int | None = None
    symbols: SymbolErrorReport | None = None


@dataclass(slots=True)
class _RunResult:
    checksum: str
    sigma_v2: float
    filters: list[_FilterRun]


def _train(
    adaptive: AdaptiveFilter, stream: SignalStream, track: bool
) -> _FilterRun:
    n = len(stream)
    mse = np.empty(n)
    emse = np.empty(n)
    msd = np.empty(n) if track else None
    for i in range(n):
        error, y_hat = adaptive.update(stream.inputs[i], stream.targets[i])
        mse[i] = abs(error) ** 2
        emse[i] = abs(stream.clean_targets[i] - y_hat) ** 2
        if msd is not None and stream.w_opt is not None:
            msd[i] = adaptive.weight_error(stream.w_opt[i])
    return _FilterRun(mse, emse, msd)


def simulate_run(
    cfg: ExperimentConfig,
    run_index: int,
    max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY,
) -> _RunResult:
    """Generate one stream and train every configured filter on it."""
    scenario = cfg.scenario
    seeds = RunSeeds.derive(cfg, run_index)
    maps = FeatureMaps(scenario.m, seeds.feature_map)
    plant_map = None
    w_opt0 = None
    if scenario.is_random_walk:
        plant_map = maps.get(scenario.plant.num_features, scenario.plant.sigma2)
        w_opt0 = plant_initial_weights(cfg, seeds)
    stream = scenario.generate(cfg.run.sample_count, seeds.stream, plant_map, w_opt0)

    test_stream = None
    if scenario.task is Task.EQUALIZE:
        test_stream = scenario.generate(cfg.run.test_count, seeds.test)

    results = []
    for spec in cfg.filters:
        adaptive = build_filter(spec, scenario, maps, max_dictionary)
        try:
            outcome = _train(adaptive, stream, tracks_plant(spec, scenario))
        except DivergenceError as exc:
            logger.warning("%s diverged in run %d: %s", spec.name, run_index, exc)
            results.append(
                _FilterRun(np.empty(0), np.empty(0), None, diverged_at=exc.iteration)
            )
            continue
        if not np.all(np.isfinite(outcome.mse)):
            first = int(np.argmin(np.isfinite(outcome.mse))) + 1
            logger.warning(
                "%s produced non-finite errors in run %d at iteration %d",
                spec.name,
                run_index,
                first,
            )
            outcome.diverged_at = first
        elif test_stream is not None:
            estimates = adaptive.predict_batch(test_stream.inputs)
            outcome.symbols = symbol_error_rate(
                estimates,
                test_stream.targets,
                eye_samples=EYE_SAMPLE_LIMIT if run_index == 0 else 0,
            )
        results.append(outcome)
    return _RunResult(stream.checksum(), stream.sigma_v2, results)


@dataclass(slots=True)
class FilterCurves:
    """Run-averaged curves of one filter (linear scale)."""

    name: str
    kind: str
    mse: NDArray[np.float64]
    emse: NDArray[np.float64]
    msd: NDArray[np.float64] | None
    runs_used: int
    diverged_runs: list[int] = field(default_factory=list)
    symbols: SymbolErrorReport | None = None

    @property
    def mse_db(self) -> NDArray[np.float64]:
        return to_db(self.mse)

    @property
    def emse_db(self) -> NDArray[np.float64]:
        return to_db(self.emse)

    @property
    def msd_db(self) -> NDArray[np.float64] | None:
        return None if self.msd is None else to_db(self.msd)

    def tail_mean(self, metric: str = "mse", fraction: float = 0.1) -> float:
        """Linear-scale mean of ``metric`` over the final ``fraction`` of samples."""
        values = getattr(self, metric)
        if values is None or len(values) == 0:
            return float("nan")
        count = max(1, int(round(len(values) * fraction)))
        return float(np.mean(values[-count:]))


@dataclass(slots=True)
class LearningCurves:
    config: ExperimentConfig
    filters: dict[str, FilterCurves]
    stream_checksums: list[str]
    sigma_v2: float

    @property
    def sample_count(self) -> int:
        return self.config.run.sample_count

    def divergence_counts(self) -> dict[str, int]:
        return {name: len(c.diverged_runs) for name, c in self.filters.items()}


def _unique_names(filters: Sequence[FilterConfig]) -> list[str]:
    names: list[str] = []
    for spec in filters:
        name = spec.name
        suffix = 2
        while name in names:
            name = f"{spec.name}#{suffix}"
            suffix += 1
        names.append(name)
    return names


def _average(
    cfg: ExperimentConfig, names: list[str], results: Sequence[_RunResult]
) -> LearningCurves:
    n = cfg.run.sample_count
    curves: dict[str, FilterCurves] = {}
    for index, (name, spec) in enumerate(zip(names, cfg.filters, strict=True)):
        track = tracks_plant(spec, cfg.scenario)
        mse = np.zeros(n)
        emse = np.zeros(n)
        msd = np.zeros(n) if track else None
        used = 0
        diverged: list[int] = []
        errors = count = 0
        eye = None
        for run_index, result in enumerate(results):
            outcome = result.filters[index]
            if outcome.diverged_at is not None:
                diverged.append(run_index)
                continue
            used += 1
            mse += outcome.mse
            emse += outcome.emse
            if msd is not None and outcome.msd is not None:
                msd += outcome.msd
            if outcome.symbols is not None:
                errors += outcome.symbols.errors
                count += outcome.symbols.count
                if eye is None and len(outcome.symbols.eye):
                    eye = outcome.symbols.eye
        if used:
            mse /= used
            emse /= used
            if msd is not None:
                msd /= used
        else:
            logger.warning("%s diverged in every run", name)
            mse[:] = emse[:] = np.nan
            if msd is not None:
                msd[:] = np.nan
        symbols = None
        if count:
            symbols = SymbolErrorReport(
                errors / count, errors, count, eye if eye is not None else np.empty((0, 2))
            )
        curves[name] = FilterCurves(
            name, spec.kind.value, mse, emse, msd, used, diverged, symbols
        )
        if diverged:
            logger.info("%s: %d of %d runs diverged", name, len(diverged), len(results))
    sigma_v2 = float(np.mean([result.sigma_v2 for result in results]))
    return LearningCurves(cfg, curves, [r.checksum for r in results], sigma_v2)


def run_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY,
) -> LearningCurves:
    """Average MSE, EMSE and (when defined) MSD curves over independent runs."""
    names = _unique_names(cfg.filters)
    run_count = cfg.run.run_count
    logger.info(
        "Running %d runs x %d samples for %s",
        run_count,
        cfg.run.sample_count,
        ", ".join(names),
    )
    if workers > 1 and run_count > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(
                executor.map(
                    simulate_run,
                    [cfg] * run_count,
                    range(run_count),
                    [max_dictionary] * run_count,
                )
            )
    else:
        results = [simulate_run(cfg, i, max_dictionary) for i in range(run_count)]
    return _average(cfg, names, results)


@dataclass(frozen=True, slots=True)
class TimingResult:
    name: str
    total_seconds: float
    mean_update_seconds: float
    growth_exponent: float
    updates: int


def growth_exponent(indices: ArrayLike, costs: ArrayLike) -> float:
    """Exponent ``p`` of ``cost = a + b * n**p`` fitted to block-mean costs.

    The constant ``a`` absorbs the fixed per-call overhead, so a cost linear in
    the update index gives ``p = 1`` however large the overhead is. Costs whose
    last block grew by less than ``FLAT_GROWTH`` over the first are reported as
    flat (``0.0``). Fewer than three blocks give ``nan``.
    """
    n = np.asarray(indices, dtype=np.float64)
    c = np.asarray(costs, dtype=np.float64)
    if n.size < 3 or not np.all(c > 0):
        return float("nan")
    scaled_n = n / n[-1]
    scaled_c = c / c[0]
    if scaled_c[-1] - 1.0 < FLAT_GROWTH:
        return 0.0

    def model(s: NDArray[np.float64], a: float, b: float, p: float) -> Any:
        return a + b * s**p

    try:
        params, _ = scipy.optimize.curve_fit(
            model,
            scaled_n,
            scaled_c,
            p0=(1.0, scaled_c[-1] - 1.0, 1.0),
            bounds=([0.0, 0.0, 0.0], [np.inf, np.inf, MAX_GROWTH_EXPONENT]),
        )
    except (RuntimeError, ValueError) as exc:
        logger.warning("Growth exponent fit failed: %s", exc)
        return float("nan")
    return float(params[2])


def timing_benchmark(
    filters: Mapping[str, AdaptiveFilter],
    inputs: ArrayLike,
    targets: ArrayLike,
    warmup: int = 50,
    blocks: int = 10,
) -> list[TimingResult]:
    """Time every update of each filter on the same stream.

    Update costs are averaged over ``blocks`` consecutive blocks and the growth
    exponent is fitted to those means with ``growth_exponent``.
    """
    x = np.asarray(inputs, dtype=np.complex128)
    y = np.asarray(targets, dtype=np.complex128)
    total = len(y)
    if total == 0:
        return []
    warmup = min(warmup, total - 1)
    report = []
    for name, adaptive in filters.items():
        for i in range(warmup):
            adaptive.update(x[i], y[i])
        costs = np.empty(total - warmup)
        for i in range(warmup, total):
            start = time.perf_counter()
            adaptive.update(x[i], y[i])
            costs[i - warmup] = time.perf_counter() - start
        chunks = [c for c in np.array_split(np.arange(costs.size), blocks) if c.size]
        centers = np.array([warmup + c.mean() + 1 for c in chunks])
        means = np.array([costs[c].mean() for c in chunks])
        report.append(
            TimingResult(
                name,
                float(costs.sum()),
                float(costs.mean()),
                growth_exponent(centers, means),
                int(costs.size),
            )
        )
    return report


def benchmark_experiment(
    cfg: ExperimentConfig, max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY
) -> list[TimingResult]:
    """Benchmark the configured filters on the run-0 stream of ``cfg``."""
    scenario = cfg.scenario
    seeds = RunSeeds.derive(cfg, 0)
    maps = FeatureMaps(scenario.m, seeds.feature_map)
    plant_map = w_opt0 = None
    if scenario.is_random_walk:
        plant_map = maps.get(scenario.plant.num_features, scenario.plant.sigma2)
        w_opt0 = plant_initial_weights(cfg, seeds)
    stream = scenario.generate(cfg.run.sample_count, seeds.stream, plant_map, w_opt0)
    filters = {
        name: build_filter(spec, scenario, maps, max_dictionary)
        for name, spec in zip(_unique_names(cfg.filters), cfg.filters, strict=True)
    }
    return timing_benchmark(filters, stream.inputs, stream.targets)


@dataclass(frozen=True, slots=True)
class TheoryRun:
    mu: float
    prediction: TheoryPrediction
    simulated: FilterCurves


@dataclass(frozen=True, slots=True)
class TheoryReport:
    moments: Moments
    sigma_v2: float
    sigma_q2: float
    runs: list[TheoryRun]
    mu_opt: float | None = None
    mse_min: float | None = None


def _tracking_filter(cfg: ExperimentConfig) -> FilterConfig:
    for spec in cfg.filters:
        if tracks_plant(spec, cfg.scenario):
            return spec
    raise ConfigurationError(
        "theory needs a random_walk_feature_plant scenario and a filter whose "
        "kind and map parameters match the plant (WLRECF for an augmented plant)"
    )


def theory_moments(
    cfg: ExperimentConfig, max_dim: int = DEFAULT_MAX_THEORY_DIM, workers: int = 1
) -> tuple[Moments, EulerFeatureMap, ExperimentConfig]:
    """Moments for the frozen plant map; also returns the frozen-map config."""
    if cfg.theory is None:
        raise ConfigurationError("the config has no theory section")
    if cfg.scenario.noise.mode is not NoiseMode.VARIANCE:
        raise ConfigurationError("theory needs scenario.noise.mode = 'variance'")
    _tracking_filter(cfg)
    frozen = replace(
        cfg, run=replace(cfg.run, resample_feature_map=False, resample_plant=False)
    )
    plant = cfg.scenario.plant
    seeds = RunSeeds.derive(frozen, 0)
    fm = FeatureMaps(cfg.scenario.m, seeds.feature_map).get(
        plant.num_features, plant.sigma2
    )
    moments = estimate_moments(
        fm,
        cfg.scenario.source,
        augmented=plant.augmented,
        n_samples=cfg.theory.n_samples,
        seed=cfg.theory.seed,
        max_dim=cfg.theory.max_dim or max_dim,
        workers=workers,
    )
    return moments, fm, frozen


def _with_filter(cfg: ExperimentConfig, spec: FilterConfig) -> ExperimentConfig:
    return replace(cfg, filters=(spec,))


def theory_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    max_dim: int = DEFAULT_MAX_THEORY_DIM,
) -> TheoryReport:
    """Predicted and simulated curves for every configured step-size.

    The feature map and the initial plant weights are frozen across runs so the
    moment matrices describe the simulated system exactly.
    """
    moments, _, frozen = theory_moments(cfg, max_dim, workers)
    assert cfg.theory is not None
    spec = _tracking_filter(frozen)
    sigma_v2 = frozen.scenario.noise.value
    sigma_q2 = frozen.scenario.plant.sigma_q2
    w_opt0 = plant_initial_weights(frozen, RunSeeds.derive(frozen, 0))
    c0 = initial_covariance(w_opt0, initial_weights(spec, frozen.scenario.m))
    n_steps = cfg.theory.n_steps or frozen.run.sample_count

    runs = []
    for mu in cfg.theory.step_sizes or (spec.mu,):
        prediction = transient_predict(moments, mu, sigma_v2, sigma_q2, n_steps, c0)
        variant = replace(spec, mu=mu)
        curves = run_experiment(
            replace(
                _with_filter(frozen, variant),
                run=replace(frozen.run, sample_count=n_steps),
            ),
            workers=workers,
        )
        runs.append(TheoryRun(mu, prediction, next(iter(curves.filters.values()))))

    mu_opt = mse_min = None
    if sigma_q2 > 0:
        mu_opt, mse_min = optimal_step_size(moments, sigma_v2, sigma_q2)
    return TheoryReport(moments, sigma_v2, sigma_q2, runs, mu_opt, mse_min)


def curves_from_prediction(name: str, prediction: TheoryPrediction) -> FilterCurves:
    """Predicted curves in the simulated-curve shape; EMSE is ``MSE - sigma_v2``."""
    return FilterCurves(
        name,
        "theory",
        prediction.mse,
        prediction.mse - prediction.sigma_v2,
        prediction.msd,
        runs_used=0,
    )


@dataclass(frozen=True, slots=True)
class SweepRow:
    parameter: str
    value: float
    simulated_mse: float
    simulated_emse: float
    predicted_mse: float | None = None


def _variant(spec: FilterConfig, parameter: SweepParameter, value: float) -> FilterConfig:
    if parameter is SweepParameter.MU:
        return replace(spec, mu=value)
    if parameter is SweepParameter.NUM_FEATURES:
        return replace(spec, num_features=int(value))
    return replace(spec, sigma2=value)


def sweep_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    max_dim: int = DEFAULT_MAX_THEORY_DIM,
) -> list[SweepRow]:
    """Steady-state MSE/EMSE of the first filter across one parameter's values.

    For step-size sweeps on a random-walk scenario with a theory section, the
    closed-form steady-state MSE is reported alongside.
    """
    if cfg.sweep is None:
        raise ConfigurationError("the config has no sweep section")
    parameter = cfg.sweep.parameter
    spec = cfg.filters[0]
    moments = None
    run_cfg = cfg
    if (
        parameter is SweepParameter.MU
        and cfg.theory is not None
        and tracks_plant(spec, cfg.scenario)
    ):
        moments, _, run_cfg = theory_moments(cfg, max_dim, workers)

    rows = []
    for value in cfg.sweep.values:
        variant = _variant(spec, parameter, value)
        curves = run_experiment(_with_filter(run_cfg, variant), workers=workers)
        result = next(iter(curves.filters.values()))
        predicted = None
        if moments is not None:
            predicted = steady_state(
                moments,
                value,
                run_cfg.scenario.noise.value,
                run_cfg.scenario.plant.sigma_q2,
            ).mse
        rows.append(
            SweepRow(
                parameter.value,
                value,
                result.tail_mean("mse", cfg.run.tail_fraction),
                result.tail_mean("emse", cfg.run.tail_fraction),
                predicted,
            )
        )
    return rows
