"""Random Euler feature map and kernel-approximation oracles.

A map is defined by ``D`` spectral vectors ``c_k`` drawn from a zero-mean Gaussian
with covariance ``sigma2 * I`` over the stacked real/imaginary coordinates of the
complex input. Entry ``k`` of the feature vector is
``sqrt(2 / D) * exp(j * c_k^T [real(x); imag(x)])``.
"""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)


def stack_real(x: ArrayLike) -> NDArray[np.float64]:
    """Return ``[real(x); imag(x)]`` along the last axis."""
    values = np.asarray(x, dtype=np.complex128)
    return np.concatenate((values.real, values.imag), axis=-1)


def gaussian_kernel(a: ArrayLike, b: ArrayLike, sigma2: float) -> float:
    """Exact real Gaussian kernel ``exp(-sigma2 * ||v_a - v_b||^2 / 2)``.

    This is the kernel whose Fourier transform the spectral vectors sample.
    """
    diff = stack_real(a) - stack_real(b)
    return float(np.exp(-0.5 * sigma2 * np.dot(diff, diff)))


@dataclass(frozen=True, slots=True, eq=False)
class EulerFeatureMap:
    """Frozen sample of spectral vectors defining ``x -> z_c(x)``.

    ``spectral_vectors`` has shape ``(num_features, 2 * input_dim)`` and is marked
    read-only, so a map can be shared between workers.
    """

    input_dim: int
    num_features: int
    sigma2: float
    seed: int
    spectral_vectors: NDArray[np.float64]

    @property
    def scale(self) -> float:
        return float(np.sqrt(2.0 / self.num_features))

    def _check_input(self, x: NDArray[np.complex128]) -> None:
        if x.shape[-1] != self.input_dim:
            raise DimensionMismatchError("input vector", self.input_dim, x.shape[-1])

    def phases(self, x: ArrayLike) -> NDArray[np.float64]:
        """Real phases ``c_k^T v`` for one input (shape ``(D,)``) or a batch."""
        values = np.asarray(x, dtype=np.complex128)
        self._check_input(values)
        return stack_real(values) @ self.spectral_vectors.T

    def map(self, x: ArrayLike, augmented: bool = False) -> NDArray[np.complex128]:
        """Evaluate ``z_c(x)`` or, when ``augmented``, ``[z_c(x); z_c*(x)]``."""
        values = np.asarray(x, dtype=np.complex128)
        if values.ndim != 1:
            raise DimensionMismatchError("input vector", self.input_dim, values.size)
        theta = self.phases(values)
        features = self.scale * (np.cos(theta) + 1j * np.sin(theta))
        if augmented:
            return np.concatenate((features, features.conj()))
        return features

    def map_batch(
        self, inputs: ArrayLike, augmented: bool = False
    ) -> NDArray[np.complex128]:
        """Evaluate the map row-wise on an ``(n, input_dim)`` batch."""
        values = np.atleast_2d(np.asarray(inputs, dtype=np.complex128))
        theta = self.phases(values)
        features = self.scale * (np.cos(theta) + 1j * np.sin(theta))
        if augmented:
            return np.concatenate((features, features.conj()), axis=1)
        return features

    def feature_dim(self, augmented: bool = False) -> int:
        return 2 * self.num_features if augmented else self.num_features

    def to_record(self) -> dict[str, Any]:
        """Small structured record from which the map can be rebuilt exactly."""
        return {
            "input_dim": self.input_dim,
            "num_features": self.num_features,
            "sigma2": self.sigma2,
            "seed": self.seed,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "EulerFeatureMap":
        return create_map(
            int(record["input_dim"]),
            int(record["num_features"]),
            float(record["sigma2"]),
            int(record["seed"]),
        )


def create_map(m: int, num_features: int, sigma2: float, seed: int) -> EulerFeatureMap:
    """Draw ``num_features`` spectral vectors of length ``2 * m``.

    The vectors come from NumPy's PCG64 generator seeded with ``seed`` so the same
    arguments always give bit-identical maps on every platform.
    """
    if m <= 0:
        raise InvalidParameterError(f"input dimension must be positive, got {m}")
    if num_features <= 0:
        raise InvalidParameterError(
            f"number of features must be positive, got {num_features}"
        )
    if not sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    if seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {seed}")

    rng = np.random.Generator(np.random.PCG64(seed))
    vectors = np.sqrt(sigma2) * rng.standard_normal((num_features, 2 * m))
    vectors.setflags(write=False)
    logger.debug(
        "Created Euler feature map m=%d D=%d sigma2=%g seed=%d",
        m,
        num_features,
        sigma2,
        seed,
    )
    return EulerFeatureMap(m, num_features, float(sigma2), int(seed), vectors)


def kernel_estimate(fm: EulerFeatureMap, a: ArrayLike, b: ArrayLike) -> complex:
    """Sample-average estimate of ``2 * kappa(v_a, v_b)``.

    Equals ``<z_c(a), z_c(b)>`` with the conjugate on the second argument. It is
    evaluated from the difference ``v_a - v_b`` so the result depends on the
    inputs only through that difference.
    """
    a_values = np.asarray(a, dtype=np.complex128)
    b_values = np.asarray(b, dtype=np.complex128)
    if a_values.shape != (fm.input_dim,):
        raise DimensionMismatchError("first input", fm.input_dim, a_values.size)
    if b_values.shape != (fm.input_dim,):
        raise DimensionMismatchError("second input", fm.input_dim, b_values.size)
    theta = fm.spectral_vectors @ (stack_real(a_values) - stack_real(b_values))
    return complex(2.0 * np.mean(np.cos(theta)), 2.0 * np.mean(np.sin(theta)))
