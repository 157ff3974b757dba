"""Signal sources, nonlinear plants, noise and the random-walk reference model."""

import hashlib
import logging
from dataclasses import dataclass, field
from enum import StrEnum
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import (
    DimensionMismatchError,
    IndexUnderflowError,
    InvalidParameterError,
)
from .feature_map import EulerFeatureMap

logger = logging.getLogger(__name__)

QPSK_SYMBOLS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=np.complex128)
EQUIPROBABLE = (0.25, 0.25, 0.25, 0.25)

# Plant coefficients are fixed published values, not configuration.
SYSTEM_I_TAPS = tuple(
    complex(
        0.432
        * (
            1
            + np.cos(2 * np.pi * (k - 3) / 5)
            - 1j * (1 + np.cos(2 * np.pi * (k - 3) / 10))
        )
    )
    for k in range(1, 6)
)
SYSTEM_I_POLY = (1.0 + 0j, 0.15 - 0.1j)
SYSTEM_II_TAPS = (-0.9 + 0.8j, 0.6 - 0.7j)
SYSTEM_II_POLY = (1.0 + 0j, 0.1 + 0.15j, 0.06 + 0.05j)
EQ_CHANNEL_TAPS = (0.34 - 0.27j, 0.87 + 0.43j, 0.34 - 0.21j)
EQ_CHANNEL_POLY = (1.0 + 0j, 0.1 + 0j, 0.05 + 0j)


class SourceKind(StrEnum):
    NONCIRCULAR_GAUSSIAN = "noncircular_gaussian"
    UNIFORM_COMPLEX = "uniform_complex"
    QPSK = "qpsk"


class PlantKind(StrEnum):
    SYSTEM_I = "system_i"
    SYSTEM_II = "system_ii"
    EQ_CHANNEL = "eq_channel"
    RANDOM_WALK_FEATURE_PLANT = "random_walk_feature_plant"


class NoiseMode(StrEnum):
    SNR_DB = "snr_db"
    VARIANCE = "variance"


class Task(StrEnum):
    IDENTIFY = "identify"
    EQUALIZE = "equalize"


_LINEAR_PARTS: dict[PlantKind, tuple[tuple[complex, ...], tuple[complex, ...]]] = {
    PlantKind.SYSTEM_I: (SYSTEM_I_TAPS, SYSTEM_I_POLY),
    PlantKind.SYSTEM_II: (SYSTEM_II_TAPS, SYSTEM_II_POLY),
    PlantKind.EQ_CHANNEL: (EQ_CHANNEL_TAPS, EQ_CHANNEL_POLY),
}


@dataclass(frozen=True, slots=True)
class SourceSpec:
    kind: SourceKind = SourceKind.NONCIRCULAR_GAUSSIAN
    rho: float = float(np.sqrt(0.5))
    probabilities: tuple[float, float, float, float] = EQUIPROBABLE
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParameterError(f"rho must lie in [0, 1], got {self.rho}")
        probabilities = np.asarray(self.probabilities, dtype=np.float64)
        if probabilities.shape != (4,):
            raise InvalidParameterError("QPSK needs exactly 4 probabilities")
        if np.any(probabilities < 0) or abs(probabilities.sum() - 1.0) > 1e-12:
            raise InvalidParameterError(
                f"probabilities must be non-negative and sum to 1, got {self.probabilities}"
            )


@dataclass(frozen=True, slots=True)
class PlantSpec:
    """Plant description; feature fields only apply to the random-walk plant."""

    kind: PlantKind = PlantKind.SYSTEM_I
    num_features: int = 8
    sigma2: float = 0.2
    sigma_q2: float = 0.0
    augmented: bool = True
    w_opt_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma_q2 < 0:
            raise InvalidParameterError(f"sigma_q2 must be >= 0, got {self.sigma_q2}")
        if self.num_features <= 0 or not self.sigma2 > 0:
            raise InvalidParameterError("plant feature map needs D > 0 and sigma2 > 0")

    @property
    def memory(self) -> int:
        """Number of input samples the plant output depends on."""
        if self.kind is PlantKind.RANDOM_WALK_FEATURE_PLANT:
            return 0
        return len(_LINEAR_PARTS[self.kind][0])


@dataclass(frozen=True, slots=True)
class NoiseSpec:
    mode: NoiseMode = NoiseMode.SNR_DB
    value: float = 30.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode is NoiseMode.VARIANCE and not self.value > 0:
            raise InvalidParameterError(
                f"noise variance must be positive, got {self.value}"
            )


class CalibratedNoise(NamedTuple):
    sigma_v2: float
    noisy: NDArray[np.complex128]
    noise: NDArray[np.complex128]


def draw_input(
    spec: SourceSpec, n: int, rng: np.random.Generator | None = None
) -> NDArray[np.complex128]:
    """Draw ``n`` i.i.d. complex samples from the source."""
    if n < 1:
        raise InvalidParameterError(f"sample count must be >= 1, got {n}")
    rng = rng if rng is not None else np.random.default_rng(spec.seed)

    if spec.kind is SourceKind.NONCIRCULAR_GAUSSIAN:
        s = rng.standard_normal((2, n))
        return np.sqrt(1.0 - spec.rho**2) * s[0] + 1j * spec.rho * s[1]
    if spec.kind is SourceKind.UNIFORM_COMPLEX:
        parts = rng.uniform(-1.0, 1.0, size=(2, n))
        return parts[0] + 1j * parts[1]
    indices = rng.choice(4, size=n, p=np.asarray(spec.probabilities))
    return QPSK_SYMBOLS[indices]


def _polynomial(
    t: NDArray[np.complex128] | complex, poly: tuple[complex, ...]
) -> NDArray[np.complex128] | complex:
    out = 0j * t
    for power, coefficient in enumerate(poly, start=1):
        out = out + coefficient * t**power
    return out


def plant_output(spec: PlantSpec | PlantKind, history: ArrayLike) -> complex:
    """Output of a fixed nonlinear plant for ``history = [x_n, x_{n-1}, ...]``."""
    kind = spec.kind if isinstance(spec, PlantSpec) else PlantKind(spec)
    if kind is PlantKind.RANDOM_WALK_FEATURE_PLANT:
        raise InvalidParameterError("use RandomWalkPlant.step for the random walk")
    taps, poly = _LINEAR_PARTS[kind]
    values = np.asarray(history, dtype=np.complex128)
    if values.size < len(taps):
        raise IndexUnderflowError(
            f"{kind.value} needs {len(taps)} history samples, got {values.size}"
        )
    t = complex(np.dot(np.asarray(taps), values[: len(taps)]))
    return complex(_polynomial(t, poly))


def plant_response(kind: PlantKind, stream: ArrayLike) -> NDArray[np.complex128]:
    """Plant output for every index of ``stream``, zero history before index 0."""
    taps, poly = _LINEAR_PARTS[PlantKind(kind)]
    values = np.asarray(stream, dtype=np.complex128)
    t = np.convolve(values, np.asarray(taps))[: len(values)]
    return _polynomial(t, poly)


def calibrate_noise(
    spec: NoiseSpec, clean: ArrayLike, rng: np.random.Generator | None = None
) -> CalibratedNoise:
    """Add circular complex Gaussian noise at the configured level."""
    values = np.asarray(clean, dtype=np.complex128)
    if values.size == 0:
        raise InvalidParameterError("cannot add noise to an empty sequence")
    if spec.mode is NoiseMode.SNR_DB:
        power = float(np.mean(values.real**2 + values.imag**2))
        if power <= 0:
            raise InvalidParameterError("SNR calibration needs a non-zero signal")
        sigma_v2 = power * 10.0 ** (-spec.value / 10.0)
    else:
        sigma_v2 = float(spec.value)
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    parts = rng.standard_normal((2, values.size))
    noise = np.sqrt(sigma_v2 / 2.0) * (parts[0] + 1j * parts[1])
    return CalibratedNoise(sigma_v2, values + noise, noise)


def build_regressor(stream: ArrayLike, n: int, m: int) -> NDArray[np.complex128]:
    """Tapped delay line ``[x_n, x_{n-1}, ..., x_{n-m+1}]``."""
    values = np.asarray(stream, dtype=np.complex128)
    if n < m - 1:
        raise IndexUnderflowError(f"index {n} has fewer than {m} past samples")
    if n >= len(values):
        raise IndexUnderflowError(f"index {n} is past the end of the stream")
    return values[n - m + 1 : n + 1][::-1].copy()


def regressor_matrix(stream: ArrayLike, m: int) -> NDArray[np.complex128]:
    """Rows are ``build_regressor(stream, n, m)`` for ``n = m-1 .. len-1``."""
    values = np.asarray(stream, dtype=np.complex128)
    if len(values) < m:
        raise IndexUnderflowError(f"stream shorter than regressor length {m}")
    windows = np.lib.stride_tricks.sliding_window_view(values, m)
    return np.ascontiguousarray(windows[:, ::-1])


def random_plant_weights(
    length: int, scale: float, rng: np.random.Generator
) -> NDArray[np.complex128]:
    """Circular Gaussian weights with ``E||w||^2 = scale^2``."""
    parts = rng.standard_normal((2, length))
    return scale * (parts[0] + 1j * parts[1]) / np.sqrt(2.0 * length)


class RandomWalkPlant:
    """Feature-space plant ``y_n = w_opt,n^H z(x_n)`` with a random-walk optimum."""

    def __init__(
        self,
        feature_map: EulerFeatureMap,
        sigma_q2: float,
        w_opt: ArrayLike,
        augmented: bool = True,
        rng: np.random.Generator | None = None,
    ) -> None:
        if sigma_q2 < 0:
            raise InvalidParameterError(f"sigma_q2 must be >= 0, got {sigma_q2}")
        self.feature_map = feature_map
        self.sigma_q2 = float(sigma_q2)
        self.augmented = augmented
        length = feature_map.feature_dim(augmented)
        self.w_opt = np.array(w_opt, dtype=np.complex128)
        if self.w_opt.shape != (length,):
            raise DimensionMismatchError(
                "optimal weight vector", length, self.w_opt.size
            )
        self.rng = rng if rng is not None else np.random.default_rng()

    def step(self, x: ArrayLike) -> tuple[complex, NDArray[np.complex128]]:
        """Advance the optimum by ``q_n`` and return the clean output and ``w_opt,n``."""
        if self.sigma_q2 > 0:
            parts = self.rng.standard_normal((2, self.w_opt.size))
            self.w_opt += np.sqrt(self.sigma_q2 / 2.0) * (parts[0] + 1j * parts[1])
        features = self.feature_map.map(x)
        if self.augmented:
            d = self.feature_map.num_features
            # Same evaluation order as the widely-linear filter output.
            y = np.vdot(self.w_opt[:d], features) + np.vdot(
                self.w_opt[d:], features.conj()
            )
        else:
            y = np.vdot(self.w_opt, features)
        return complex(y), self.w_opt.copy()


@dataclass(slots=True)
class SignalStream:
    """One run's data: regressors, targets and what the metrics need."""

    inputs: NDArray[np.complex128]
    targets: NDArray[np.complex128]
    clean_targets: NDArray[np.complex128]
    noise: NDArray[np.complex128]
    sigma_v2: float
    w_opt: NDArray[np.complex128] | None = None

    def __len__(self) -> int:
        return len(self.targets)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for array in (self.inputs, self.targets, self.noise):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True, slots=True)
class Scenario:
    """Composable source, plant and noise model for one experiment family."""

    m: int
    source: SourceSpec = field(default_factory=SourceSpec)
    plant: PlantSpec = field(default_factory=PlantSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    task: Task = Task.IDENTIFY
    delay: int = 0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InvalidParameterError(f"regressor length must be >= 1, got {self.m}")
        if self.delay < 0:
            raise InvalidParameterError(f"delay must be >= 0, got {self.delay}")
        if self.task is Task.EQUALIZE and self.plant.kind is not PlantKind.EQ_CHANNEL:
            raise InvalidParameterError("equalization requires the eq_channel plant")

    @property
    def is_random_walk(self) -> bool:
        return self.plant.kind is PlantKind.RANDOM_WALK_FEATURE_PLANT

    def generate(
        self,
        n: int,
        seed: np.random.SeedSequence,
        feature_map: EulerFeatureMap | None = None,
        w_opt0: ArrayLike | None = None,
    ) -> SignalStream:
        """Draw ``n`` training pairs using independent child streams of ``seed``."""
        if n < 1:
            raise InvalidParameterError(f"sample count must be >= 1, got {n}")
        # Children are keyed explicitly so ``seed`` is not advanced by spawning.
        source_seed, noise_seed, plant_seed = (
            np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, i))
            for i in range(3)
        )
        source_rng = np.random.default_rng(source_seed)
        noise_rng = np.random.default_rng(noise_seed)

        if self.task is Task.EQUALIZE:
            return self._generate_equalization(n, source_rng, noise_rng)
        if self.is_random_walk:
            return self._generate_random_walk(
                n,
                source_rng,
                noise_rng,
                np.random.default_rng(plant_seed),
                feature_map,
                w_opt0,
            )

        stream = draw_input(self.source, n + self.m - 1, source_rng)
        clean = plant_response(self.plant.kind, stream)[self.m - 1 :]
        calibrated = calibrate_noise(self.noise, clean, noise_rng)
        return SignalStream(
            inputs=regressor_matrix(stream, self.m),
            targets=calibrated.noisy,
            clean_targets=clean,
            noise=calibrated.noise,
            sigma_v2=calibrated.sigma_v2,
        )

    def _generate_random_walk(
        self,
        n: int,
        source_rng: np.random.Generator,
        noise_rng: np.random.Generator,
        plant_rng: np.random.Generator,
        feature_map: EulerFeatureMap | None,
        w_opt0: ArrayLike | None,
    ) -> SignalStream:
        if feature_map is None:
            raise InvalidParameterError("the random-walk plant needs a feature map")
        length = feature_map.feature_dim(self.plant.augmented)
        if w_opt0 is None:
            w_opt0 = random_plant_weights(length, self.plant.w_opt_scale, plant_rng)
        plant = RandomWalkPlant(
            feature_map, self.plant.sigma_q2, w_opt0, self.plant.augmented, plant_rng
        )
        stream = draw_input(self.source, n + self.m - 1, source_rng)
        inputs = regressor_matrix(stream, self.m)
        clean = np.empty(n, dtype=np.complex128)
        path = np.empty((n, length), dtype=np.complex128)
        for i, x in enumerate(inputs):
            clean[i], path[i] = plant.step(x)
        calibrated = calibrate_noise(self.noise, clean, noise_rng)
        return SignalStream(
            inputs=inputs,
            targets=calibrated.noisy,
            clean_targets=clean,
            noise=calibrated.noise,
            sigma_v2=calibrated.sigma_v2,
            w_opt=path,
        )

    def _generate_equalization(
        self,
        n: int,
        source_rng: np.random.Generator,
        noise_rng: np.random.Generator,
    ) -> SignalStream:
        # Noise corrupts the received channel output; targets are the clean
        # delayed symbols, so the target-side noise is zero.
        start = max(self.m - 1, self.delay)
        symbols = draw_input(self.source, n + start, source_rng)
        received = calibrate_noise(
            self.noise, plant_response(PlantKind.EQ_CHANNEL, symbols), noise_rng
        )
        inputs = regressor_matrix(received.noisy, self.m)[start - self.m + 1 :]
        targets = symbols[start - self.delay : start - self.delay + n].copy()
        return SignalStream(
            inputs=inputs,
            targets=targets,
            clean_targets=targets,
            noise=np.zeros(n, dtype=np.complex128),
            sigma_v2=received.sigma_v2,
        )
