"""Tests for the Monte Carlo harness, symbol decisions and the benchmark."""

import copy
from pathlib import Path

import numpy as np
import pytest

from random_euler_filters.exceptions import ConfigurationError, InvalidParameterError
from random_euler_filters.feature_map import create_map
from random_euler_filters.filters import CklmsFilter, FilterKind, create_filter
from random_euler_filters.harness import (
    FeatureMaps,
    FilterCurves,
    RunSeeds,
    benchmark_experiment,
    build_filter,
    curves_from_prediction,
    decide_symbols,
    growth_exponent,
    initial_weights,
    run_experiment,
    sweep_experiment,
    symbol_error_rate,
    theory_experiment,
    theory_moments,
    timing_benchmark,
    to_db,
    tracks_plant,
)
from random_euler_filters.models import (
    FilterConfig,
    InitialWeights,
    experiment_config_to_dict,
    load_experiment_config,
    parse_experiment_config,
    with_overrides,
)
from random_euler_filters.scenarios import QPSK_SYMBOLS
from random_euler_filters.theory import optimal_step_size, transient_predict

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

_IDENTIFY = {
    "scenario": {
        "m": 3,
        "source": {"kind": "noncircular_gaussian", "rho": 0.1},
        "plant": {"kind": "system_i"},
        "noise": {"mode": "snr_db", "value": 30},
    },
    "filters": [
        {"kind": "clms", "mu": 0.05},
        {"kind": "lrecf", "mu": 0.05, "num_features": 20, "sigma2": 0.2},
        {"kind": "wlrecf", "mu": 0.05, "num_features": 20, "sigma2": 0.2},
    ],
    "run": {"run_count": 3, "sample_count": 200, "master_seed": 5},
}

_RANDOM_WALK = {
    "scenario": {
        "m": 3,
        "source": {"kind": "noncircular_gaussian", "rho": 0.1},
        "plant": {
            "kind": "random_walk_feature_plant",
            "num_features": 4,
            "sigma2": 0.2,
            "sigma_q2": 1e-6,
            "augmented": True,
        },
        "noise": {"mode": "variance", "value": 0.01},
    },
    "filters": [
        {"kind": "wlrecf", "mu": 0.02, "num_features": 4, "sigma2": 0.2},
        {"kind": "lrecf", "mu": 0.02, "num_features": 4, "sigma2": 0.2},
    ],
    "run": {
        "run_count": 4,
        "sample_count": 300,
        "master_seed": 1,
        "resample_feature_map": False,
        "resample_plant": False,
        "tail_fraction": 0.2,
    },
    "theory": {"n_samples": 2000, "seed": 4, "step_sizes": [0.02, 0.01]},
}


def _config(base: dict, **run: object):
    raw = copy.deepcopy(base)
    raw["run"].update(run)
    return parse_experiment_config(raw)


def test_to_db() -> None:
    """Powers convert to decibels; zero maps to minus infinity."""
    assert np.allclose(to_db([1.0, 10.0, 0.01]), [0.0, 10.0, -20.0])
    assert to_db([0.0])[0] == -np.inf


def test_run_seeds_follow_resampling_flags() -> None:
    """Map and plant seeds vary by run only when resampling is on."""
    resampled = _config(_IDENTIFY)
    frozen = _config(_RANDOM_WALK)

    first, second = RunSeeds.derive(resampled, 0), RunSeeds.derive(resampled, 1)
    assert first.feature_map != second.feature_map
    assert first.plant != second.plant
    assert first.stream.generate_state(4).tolist() != second.stream.generate_state(4).tolist()

    frozen_first, frozen_second = RunSeeds.derive(frozen, 0), RunSeeds.derive(frozen, 7)
    assert frozen_first.feature_map == frozen_second.feature_map
    assert frozen_first.plant == frozen_second.plant


def test_feature_maps_are_shared_per_parameters() -> None:
    """Equal (D, sigma2) pairs share one map per run."""
    maps = FeatureMaps(3, seed=11)

    assert maps.get(20, 0.2) is maps.get(20, 0.2)
    assert maps.get(20, 0.5) is not maps.get(20, 0.2)
    assert np.array_equal(
        maps.get(20, 0.2).spectral_vectors, create_map(3, 20, 0.2, 11).spectral_vectors
    )


@pytest.mark.parametrize(
    ("kind", "length"),
    [(FilterKind.CLMS, 3), (FilterKind.LRECF, 20), (FilterKind.WLRECF, 40)],
)
def test_initial_weights_of_ones(kind: FilterKind, length: int) -> None:
    """The all-one start has the length of each kind's state."""
    spec = FilterConfig(kind, 0.1, num_features=20, initial=InitialWeights.ONES)

    weights = initial_weights(spec, 3)

    assert weights is not None
    assert np.array_equal(weights, np.ones(length))


def test_initial_weights_default_to_zero_state() -> None:
    """Zero starts and CKLMS leave the filter default."""
    assert initial_weights(FilterConfig(FilterKind.LRECF, 0.1), 3) is None
    assert (
        initial_weights(FilterConfig(FilterKind.CKLMS, 0.1, initial=InitialWeights.ONES), 3)
        is None
    )


def test_build_filter_uses_map_bandwidth_for_cklms() -> None:
    """CKLMS falls back to sigma2 for its kernel bandwidth."""
    cfg = _config(_IDENTIFY)

    adaptive = build_filter(
        FilterConfig(FilterKind.CKLMS, 0.1, sigma2=0.3), cfg.scenario, FeatureMaps(3, 0)
    )

    assert isinstance(adaptive, CklmsFilter)
    assert adaptive.kernel_sigma2 == 0.3


def test_tracks_plant() -> None:
    """Only augmented filters matching the plant map track w_opt."""
    cfg = _config(_RANDOM_WALK)
    wlrecf, lrecf = cfg.filters

    assert tracks_plant(wlrecf, cfg.scenario)
    assert not tracks_plant(lrecf, cfg.scenario)
    assert not tracks_plant(FilterConfig(FilterKind.WLRECF, 0.1, 8, 0.2), cfg.scenario)
    assert not tracks_plant(wlrecf, _config(_IDENTIFY).scenario)


def test_run_experiment_is_reproducible() -> None:
    """Same config, same streams and bit-identical curves."""
    cfg = _config(_IDENTIFY)

    first = run_experiment(cfg)
    second = run_experiment(cfg)

    assert list(first.filters) == ["CLMS", "LRECF", "WLRECF"]
    assert first.stream_checksums == second.stream_checksums
    assert len(set(first.stream_checksums)) == 3
    for name, curves in first.filters.items():
        assert curves.mse.shape == (200,)
        assert curves.runs_used == 3
        assert curves.msd is None
        assert np.array_equal(curves.mse, second.filters[name].mse)
        assert np.array_equal(curves.emse, second.filters[name].emse)


def test_run_experiment_is_independent_of_worker_count() -> None:
    """Process workers do not change the averaged curves."""
    cfg = _config(_IDENTIFY)

    serial = run_experiment(cfg, workers=1)
    parallel = run_experiment(cfg, workers=2)

    assert serial.stream_checksums == parallel.stream_checksums
    for name in serial.filters:
        assert np.array_equal(serial.filters[name].mse, parallel.filters[name].mse)


def test_master_seed_changes_streams() -> None:
    """A different master seed draws different data."""
    first = run_experiment(_config(_IDENTIFY, run_count=1))
    second = run_experiment(_config(_IDENTIFY, run_count=1, master_seed=6))

    assert first.stream_checksums != second.stream_checksums


def test_filters_consume_the_same_stream() -> None:
    """Adding a filter does not change the data the others see."""
    cfg = _config(_IDENTIFY, run_count=2)
    raw = copy.deepcopy(_IDENTIFY)
    raw["filters"] = raw["filters"][1:2]
    raw["run"]["run_count"] = 2

    full = run_experiment(cfg)
    single = run_experiment(parse_experiment_config(raw))

    assert full.stream_checksums == single.stream_checksums
    assert np.array_equal(full.filters["LRECF"].mse, single.filters["LRECF"].mse)


def test_msd_only_for_tracking_filters() -> None:
    """MSD is reported for filters that track the plant weights."""
    curves = run_experiment(_config(_RANDOM_WALK))

    assert curves.filters["WLRECF"].msd is not None
    assert np.all(curves.filters["WLRECF"].msd > 0)
    assert curves.filters["LRECF"].msd is None
    assert curves.sigma_v2 == pytest.approx(0.01)


def test_duplicate_filter_names_are_suffixed() -> None:
    """Repeated kinds get numbered names."""
    raw = copy.deepcopy(_IDENTIFY)
    raw["filters"] = [raw["filters"][0], raw["filters"][0]]

    curves = run_experiment(_config(raw, run_count=1))

    assert list(curves.filters) == ["CLMS", "CLMS#2"]


def test_divergent_runs_are_counted_and_excluded() -> None:
    """Diverged runs are listed and left out of the averages."""
    raw = copy.deepcopy(_IDENTIFY)
    raw["filters"] = [{"kind": "clms", "mu": 50.0}, raw["filters"][1]]

    curves = run_experiment(_config(raw, sample_count=400))

    diverged = curves.filters["CLMS"]
    assert diverged.diverged_runs == [0, 1, 2]
    assert diverged.runs_used == 0
    assert np.all(np.isnan(diverged.mse))
    assert curves.divergence_counts() == {"CLMS": 3, "LRECF": 0}
    assert np.all(np.isfinite(curves.filters["LRECF"].mse))


def test_tail_mean() -> None:
    """Tail means cover at least one sample and skip missing metrics."""
    curves = FilterCurves("x", "clms", np.arange(10.0), np.zeros(10), None, 1)

    assert curves.tail_mean("mse", 0.2) == 8.5
    assert curves.tail_mean("mse", 0.01) == 9.0
    assert np.isnan(curves.tail_mean("msd"))


def test_decide_symbols_breaks_ties_by_constellation_order() -> None:
    """The origin decides to the first QPSK symbol."""
    assert np.array_equal(decide_symbols([0j, 0.9 - 1.2j]), [QPSK_SYMBOLS[0], 1 - 1j])


def test_symbol_error_rate_examples() -> None:
    """Exact, slightly noisy and all-zero outputs."""
    symbols = np.tile(QPSK_SYMBOLS, 25)

    assert symbol_error_rate(symbols, symbols).ser == 0.0
    noisy = symbol_error_rate(symbols + 0.3 - 0.2j, symbols)
    assert noisy.ser == 0.0
    assert noisy.count == 100

    undecided = symbol_error_rate(np.zeros(100), symbols)
    assert undecided.ser == 0.75
    assert undecided.errors == 75


def test_symbol_error_rate_eye_dump() -> None:
    """Eye samples are real/imaginary pairs capped at the request."""
    symbols = np.tile(QPSK_SYMBOLS, 5)

    report = symbol_error_rate(symbols, symbols, eye_samples=6)

    assert report.eye.shape == (6, 2)
    assert np.array_equal(report.eye[0], [1.0, 1.0])
    assert symbol_error_rate(symbols, symbols).eye.shape == (0, 2)


def test_symbol_error_rate_validation() -> None:
    """Empty or mismatched inputs are rejected."""
    with pytest.raises(InvalidParameterError):
        symbol_error_rate([], [])
    with pytest.raises(InvalidParameterError):
        symbol_error_rate(np.zeros(3), np.zeros(4))


def test_equalization_experiment_reports_symbol_errors() -> None:
    """Every equalizer gets an SER over all runs and a run-0 eye."""
    raw = experiment_config_to_dict(
        load_experiment_config(CONFIG_DIR / "equalize_case1.json")
    )
    raw["filters"] = [
        {"kind": "clms", "mu": 0.08},
        {"kind": "wlrecf", "mu": 0.08, "num_features": 50, "sigma2": 0.05},
    ]
    raw["run"].update(run_count=2, sample_count=300, test_count=1000)

    curves = run_experiment(parse_experiment_config(raw))

    for name in ("CLMS", "WLRECF"):
        symbols = curves.filters[name].symbols
        assert symbols is not None
        assert symbols.count == 2000
        assert 0.0 <= symbols.ser < 0.75
        assert symbols.eye.shape == (1000, 2)


def test_timing_benchmark_on_empty_stream() -> None:
    """Nothing to time gives an empty report."""
    adaptive = create_filter("clms", 0.1, 2)

    assert timing_benchmark({"CLMS": adaptive}, np.empty((0, 2)), np.empty(0)) == []


def test_timing_benchmark_counts_updates() -> None:
    """Warm-up updates run but are not timed."""
    rng = np.random.default_rng(0)
    inputs = rng.standard_normal((300, 2)) + 0j
    targets = inputs[:, 0]
    filters = {
        "CLMS": create_filter("clms", 0.05, 2),
        "CKLMS": create_filter("cklms", 0.05, 2, kernel_sigma2=0.5),
    }

    report = timing_benchmark(filters, inputs, targets, warmup=50, blocks=5)

    assert [result.name for result in report] == ["CLMS", "CKLMS"]
    for result in report:
        assert result.updates == 250
        assert result.total_seconds > 0
        assert result.mean_update_seconds == pytest.approx(result.total_seconds / 250)
        assert np.isfinite(result.growth_exponent)
    assert filters["CKLMS"].update_count == 300


def test_benchmark_experiment_uses_configured_filters() -> None:
    """The benchmark times the config's filters on run 0."""
    report = benchmark_experiment(_config(_IDENTIFY, sample_count=120))

    assert [result.name for result in report] == ["CLMS", "LRECF", "WLRECF"]
    assert all(result.updates == 70 for result in report)


@pytest.mark.parametrize(
    ("overhead", "slope", "power"), [(2e-5, 3e-9, 1.0), (1e-5, 1e-12, 2.0)]
)
def test_growth_exponent_ignores_fixed_overhead(
    overhead: float, slope: float, power: float
) -> None:
    """A constant per-call cost does not bias the fitted exponent."""
    centers = np.linspace(550.0, 9550.0, 10)

    fitted = growth_exponent(centers, overhead + slope * centers**power)

    assert fitted == pytest.approx(power, abs=0.02)


def test_growth_exponent_of_flat_and_short_series() -> None:
    """Costs within timing jitter are flat; fewer than three blocks cannot be fitted."""
    centers = np.linspace(550.0, 9550.0, 10)
    jitter = 1.0 + 0.05 * np.sin(np.arange(10))

    assert growth_exponent(centers, 2e-5 * jitter) == 0.0
    assert np.isnan(growth_exponent(centers[:2], [1e-5, 2e-5]))
    assert np.isnan(growth_exponent(centers, np.zeros(10)))


@pytest.mark.slow
def test_benchmark_cost_ordering_and_growth() -> None:
    """Fixed-size filters cost O(1) per update, CKLMS grows linearly and costs most."""
    report = benchmark_experiment(load_experiment_config(CONFIG_DIR / "bench.json"))

    results = {result.name: result for result in report}
    assert (
        results["LRECF"].total_seconds
        < results["WLRECF"].total_seconds
        < results["CKLMS"].total_seconds
    )
    assert results["CKLMS"].growth_exponent == pytest.approx(1.0, abs=0.35)
    assert results["LRECF"].growth_exponent < 0.3
    assert results["WLRECF"].growth_exponent < 0.3


def test_sweep_experiment_varies_first_filter() -> None:
    """A mu sweep reruns the first filter once per value."""
    raw = copy.deepcopy(_IDENTIFY)
    raw["sweep"] = {"parameter": "mu", "values": [0.01, 0.05]}

    rows = sweep_experiment(_config(raw, run_count=2))

    assert [row.value for row in rows] == [0.01, 0.05]
    assert all(row.parameter == "mu" for row in rows)
    assert all(row.predicted_mse is None for row in rows)
    assert all(row.simulated_mse > 0 and row.simulated_emse > 0 for row in rows)


def test_sweep_over_num_features() -> None:
    """Feature-count sweeps label their rows."""
    raw = copy.deepcopy(_IDENTIFY)
    raw["filters"] = raw["filters"][1:]
    raw["sweep"] = {"parameter": "num_features", "values": [10, 30]}

    rows = sweep_experiment(_config(raw, run_count=1))

    assert [row.parameter for row in rows] == ["num_features", "num_features"]


def test_mu_sweep_reports_closed_form_prediction() -> None:
    """Random-walk mu sweeps carry the steady-state prediction."""
    raw = copy.deepcopy(_RANDOM_WALK)
    raw["sweep"] = {"parameter": "mu", "values": [0.01, 0.02]}

    rows = sweep_experiment(_config(raw, run_count=2))

    for row in rows:
        assert row.predicted_mse is not None
        assert row.predicted_mse > 0.01


def test_sweep_needs_section() -> None:
    """A config without a sweep section cannot be swept."""
    with pytest.raises(ConfigurationError, match="sweep"):
        sweep_experiment(_config(_IDENTIFY))


def test_theory_moments_requirements() -> None:
    """Theory needs its section, variance noise and a matching filter."""
    with pytest.raises(ConfigurationError, match="theory section"):
        theory_moments(_config(_IDENTIFY))

    raw = copy.deepcopy(_RANDOM_WALK)
    raw["scenario"]["noise"] = {"mode": "snr_db", "value": 20}
    with pytest.raises(ConfigurationError, match="variance"):
        theory_moments(parse_experiment_config(raw))

    raw = copy.deepcopy(_RANDOM_WALK)
    raw["filters"] = raw["filters"][1:]
    with pytest.raises(ConfigurationError, match="match the plant"):
        theory_moments(parse_experiment_config(raw))


def test_theory_moments_use_the_plant_map() -> None:
    """Moments come from the frozen run-0 plant map."""
    cfg = _config(_RANDOM_WALK, resample_feature_map=True)

    moments, fm, frozen = theory_moments(cfg)

    assert moments.dim == 8
    assert not frozen.run.resample_feature_map
    assert fm.seed == RunSeeds.derive(frozen, 0).feature_map


def test_theory_experiment_pairs_predictions_with_simulations() -> None:
    """One predicted and one simulated curve per step-size."""
    report = theory_experiment(_config(_RANDOM_WALK))

    assert [run.mu for run in report.runs] == [0.02, 0.01]
    assert report.sigma_v2 == 0.01
    assert report.mu_opt is not None and report.mu_opt > 0
    assert report.mse_min is not None and report.mse_min > 0.01
    for run in report.runs:
        assert run.prediction.mse.shape == (300,)
        assert run.simulated.mse.shape == (300,)
        assert run.simulated.msd is not None
        assert run.prediction.stable

    predicted = curves_from_prediction("WLRECF theory", report.runs[0].prediction)
    assert predicted.kind == "theory"
    assert np.allclose(predicted.emse, predicted.mse - 0.01)


@pytest.mark.slow
@pytest.mark.parametrize("sigma_v2", [0.1, 0.01])
def test_theory_follows_simulation_pointwise(sigma_v2: float) -> None:
    """Predicted MSE and MSD stay within 1.5 dB of 500-run averages past iteration 50."""
    raw = experiment_config_to_dict(
        load_experiment_config(CONFIG_DIR / "theory_small.json")
    )
    raw["scenario"]["noise"]["value"] = sigma_v2

    report = theory_experiment(parse_experiment_config(raw), workers=2)

    assert report.moments.dim == 16
    assert [run.mu for run in report.runs] == [0.01, 0.005, 0.001]
    for run in report.runs:
        assert run.simulated.runs_used == 500
        assert run.simulated.msd is not None
        mse_gap = to_db(run.prediction.mse[50:]) - to_db(run.simulated.mse[50:])
        msd_gap = to_db(run.prediction.msd[50:]) - to_db(run.simulated.msd[50:])
        assert np.max(np.abs(mse_gap)) < 1.5
        assert np.max(np.abs(msd_gap)) < 1.5

        # The steady state does not depend on C0, so a zero start converges fastest.
        long_run = transient_predict(
            report.moments, run.mu, sigma_v2, report.sigma_q2, 100_000
        )
        assert long_run.steady is not None
        assert long_run.mse[-20_000:].mean() == pytest.approx(
            long_run.steady.mse, rel=0.02
        )


@pytest.mark.slow
def test_widely_linear_filter_wins_on_noncircular_input() -> None:
    """On System I with rho = 0.1 the widely-linear filter is at least 0.5 dB lower."""
    cfg = with_overrides(
        load_experiment_config(CONFIG_DIR / "system1_noncircular.json"), runs=20
    )

    curves = run_experiment(cfg, workers=2)

    tails = {
        name: float(to_db(c.tail_mean("mse", 0.1)))
        for name, c in curves.filters.items()
    }
    assert tails["LRECF"] - tails["WLRECF"] >= 0.5
    assert tails["WLRECF"] < tails["CLMS"]


@pytest.mark.slow
def test_random_feature_filters_beat_clms_on_system_ii() -> None:
    """On System II the steady MSE orders as WLRECF <= LRECF < CLMS."""
    cfg = with_overrides(load_experiment_config(CONFIG_DIR / "system2.json"), runs=10)

    curves = run_experiment(cfg, workers=2)

    tails = {name: c.tail_mean("mse", 0.1) for name, c in curves.filters.items()}
    assert tails["WLRECF"] <= tails["LRECF"] < tails["CLMS"]


@pytest.mark.slow
def test_stationary_sweep_approaches_noise_floor() -> None:
    """Without plant drift, smaller steps bring the simulated MSE down to sigma_v2."""
    raw = experiment_config_to_dict(load_experiment_config(CONFIG_DIR / "sweep_mu.json"))
    raw["scenario"]["plant"]["sigma_q2"] = 0.0
    raw["sweep"]["values"] = [0.05, 0.02, 0.005]
    raw["run"].update(run_count=10, sample_count=40_000)
    sigma_v2 = raw["scenario"]["noise"]["value"]

    rows = sweep_experiment(parse_experiment_config(raw), workers=2)

    simulated = [row.simulated_mse for row in rows]
    assert simulated[0] > simulated[1] > simulated[2]
    assert simulated[-1] == pytest.approx(sigma_v2, rel=0.05)
    for row in rows:
        assert row.predicted_mse is not None
        assert row.simulated_mse == pytest.approx(row.predicted_mse, rel=0.05)


@pytest.mark.slow
def test_simulated_sweep_minimum_sits_at_optimal_step_size() -> None:
    """The simulated MSE minimum over a log grid is one step from mu_opt."""
    raw = experiment_config_to_dict(load_experiment_config(CONFIG_DIR / "sweep_mu.json"))
    raw["run"].update(run_count=10)
    cfg = parse_experiment_config(raw)
    moments, _, frozen = theory_moments(cfg)
    mu_opt, mse_min = optimal_step_size(
        moments, frozen.scenario.noise.value, frozen.scenario.plant.sigma_q2
    )

    rows = sweep_experiment(cfg, workers=2)

    values = np.array([row.value for row in rows])
    simulated = np.array([row.simulated_mse for row in rows])
    best = int(np.argmin(simulated))
    widest_step = np.max(np.diff(np.log(values)))
    assert abs(np.log(values[best] / mu_opt)) <= widest_step
    assert simulated[best] == pytest.approx(mse_min, rel=0.1)


def test_mse_minus_emse_is_noise_power() -> None:
    """Over a stationary tail the MSE and EMSE differ by the noise variance."""
    cfg = load_experiment_config(CONFIG_DIR / "system2.json")
    raw = experiment_config_to_dict(cfg)
    raw["filters"] = [{"kind": "clms", "mu": 0.05}]
    raw["run"].update(run_count=30, sample_count=1000)

    curves = run_experiment(parse_experiment_config(raw))

    clms = curves.filters["CLMS"]
    gap = clms.tail_mean("mse", 0.2) - clms.tail_mean("emse", 0.2)
    assert gap == pytest.approx(curves.sigma_v2, rel=0.1)


@pytest.mark.slow
@pytest.mark.parametrize(
    ("config", "max_ser"), [("equalize_case1.json", 0.05), ("equalize_case2.json", 0.1)]
)
def test_widely_linear_equalizer_separates_symbols(config: str, max_ser: float) -> None:
    """WLRECF equalizers reach a low SER with compact clusters."""
    raw = experiment_config_to_dict(load_experiment_config(CONFIG_DIR / config))
    raw["filters"] = [f for f in raw["filters"] if f["kind"] == "wlrecf"]
    raw["run"].update(run_count=1, test_count=30_000)

    symbols = run_experiment(parse_experiment_config(raw)).filters["WLRECF"].symbols

    assert symbols is not None
    assert symbols.ser < max_ser
    points = symbols.eye[:, 0] + 1j * symbols.eye[:, 1]
    decided = decide_symbols(points)
    centroids = {}
    spreads = []
    for symbol in QPSK_SYMBOLS:
        cluster = points[decided == symbol]
        if len(cluster):
            centroids[symbol] = cluster.mean()
            spreads.append(np.sqrt(np.mean(np.abs(cluster - cluster.mean()) ** 2)))
    distances = [
        abs(a - b) for a in centroids.values() for b in centroids.values() if a != b
    ]
    assert len(centroids) == 4
    assert max(spreads) < min(distances) / 2
