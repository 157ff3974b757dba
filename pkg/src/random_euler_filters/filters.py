"""Online complex-valued adaptive filters.

All filters share one interface: ``predict`` is pure, ``update`` computes the a
priori error and adapts the state. Kinds:

- CLMS: ``y_hat = w^H x``, ``w += mu e* x``.
- LRECF: ``y_hat = u^H z_c(x)``, ``u += mu e* z_c(x)``.
- WLRECF: ``y_hat = u^H z_c(x) + v^H z_c*(x)``, augmented ``[u; v] += mu e* z_cc(x)``.
- CKLMS: growing Gaussian-kernel expansion ``y_hat = 2 sum_i alpha_i kappa(x, x_i)``
  with ``alpha_i = mu e_i``.
"""

import logging
from abc import ABC, abstractmethod
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import DEFAULT_CKLMS_MAX_DICTIONARY
from .exceptions import (
    DictionaryCapacityError,
    DimensionMismatchError,
    DivergenceError,
    InvalidParameterError,
    NonFiniteInputError,
    UnsupportedOperationError,
)
from .feature_map import EulerFeatureMap, stack_real

logger = logging.getLogger(__name__)

PREDICT_BATCH_CHUNK = 4096


class FilterKind(StrEnum):
    CLMS = "clms"
    LRECF = "lrecf"
    WLRECF = "wlrecf"
    CKLMS = "cklms"


def _as_input(x: ArrayLike, m: int) -> NDArray[np.complex128]:
    values = np.asarray(x, dtype=np.complex128)
    if values.shape != (m,):
        raise DimensionMismatchError("input vector", m, values.size)
    return values


class AdaptiveFilter(ABC):
    """State and update rule shared by every filter kind."""

    kind: FilterKind

    def __init__(self, mu: float, m: int, allow_zero_step: bool = False) -> None:
        if m <= 0:
            raise InvalidParameterError(f"input dimension must be positive, got {m}")
        if not (mu > 0 or (allow_zero_step and mu == 0)):
            raise InvalidParameterError(f"step-size must be positive, got {mu}")
        self.mu = float(mu)
        self.m = m
        self.update_count = 0

    def _features(self, x: NDArray[np.complex128]) -> NDArray[Any]:
        """Per-sample representation shared by the output and the increment."""
        return x

    @abstractmethod
    def _output(self, features: NDArray[Any]) -> complex:
        """Filter output for precomputed ``features``."""

    @abstractmethod
    def _adapt(
        self, x: NDArray[np.complex128], features: NDArray[Any], error: complex
    ) -> None:
        """Apply the weight increment for the a priori ``error``."""

    def predict(self, x: ArrayLike) -> complex:
        """Filter output for one regressor, without changing the state."""
        return self._output(self._features(_as_input(x, self.m)))

    def predict_batch(self, inputs: ArrayLike) -> NDArray[np.complex128]:
        """Outputs for an ``(n, m)`` batch with the current (frozen) state."""
        values = np.asarray(inputs, dtype=np.complex128)
        return np.array([self.predict(row) for row in values], dtype=np.complex128)

    def update(self, x: ArrayLike, y: complex) -> tuple[complex, complex]:
        """Adapt on one sample and return ``(e, y_hat)``."""
        values = _as_input(x, self.m)
        if not (np.all(np.isfinite(values)) and np.isfinite(y)):
            raise NonFiniteInputError(
                f"non-finite sample at iteration {self.update_count + 1}"
            )
        # One feature evaluation serves both the a priori output and the step.
        features = self._features(values)
        y_hat = self._output(features)
        error = complex(y) - y_hat
        self._adapt(values, features, error)
        self.update_count += 1
        if not self._is_finite():
            raise DivergenceError(
                f"{self.kind.value.upper()} weights became non-finite at "
                f"iteration {self.update_count}",
                iteration=self.update_count,
            )
        return error, y_hat

    def _is_finite(self) -> bool:
        return True

    def weight_error(self, w_opt: ArrayLike) -> float:
        """Squared distance ``||w_opt - weights||^2``."""
        raise UnsupportedOperationError(
            f"weight error is not defined for {self.kind.value.upper()}"
        )


class _WeightVectorFilter(AdaptiveFilter):
    """Filters whose whole state is a fixed-length complex weight vector."""

    def __init__(
        self,
        mu: float,
        m: int,
        length: int,
        init: ArrayLike | None = None,
        allow_zero_step: bool = False,
    ) -> None:
        super().__init__(mu, m, allow_zero_step)
        if init is None:
            self.weights = np.zeros(length, dtype=np.complex128)
        else:
            initial = np.array(init, dtype=np.complex128)
            if initial.shape != (length,):
                raise DimensionMismatchError("initial weights", length, initial.size)
            self.weights = initial

    def _is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)))

    def weight_error(self, w_opt: ArrayLike) -> float:
        target = np.asarray(w_opt, dtype=np.complex128)
        if target.shape != self.weights.shape:
            raise DimensionMismatchError(
                "optimal weight vector", self.weights.size, target.size
            )
        diff = target - self.weights
        return float(np.sum(diff.real**2 + diff.imag**2))


class ClmsFilter(_WeightVectorFilter):
    kind = FilterKind.CLMS

    def __init__(
        self,
        mu: float,
        m: int,
        init: ArrayLike | None = None,
        allow_zero_step: bool = False,
    ) -> None:
        super().__init__(mu, m, m, init, allow_zero_step)

    def _output(self, features: NDArray[np.complex128]) -> complex:
        return complex(np.vdot(self.weights, features))

    def predict_batch(self, inputs: ArrayLike) -> NDArray[np.complex128]:
        return np.asarray(inputs, dtype=np.complex128) @ self.weights.conj()

    def _adapt(
        self,
        x: NDArray[np.complex128],
        features: NDArray[np.complex128],
        error: complex,
    ) -> None:
        self.weights += self.mu * error.conjugate() * features


class LrecfFilter(_WeightVectorFilter):
    """Linear random Euler complex-valued filter."""

    kind = FilterKind.LRECF

    def __init__(
        self,
        mu: float,
        feature_map: EulerFeatureMap,
        init: ArrayLike | None = None,
        allow_zero_step: bool = False,
    ) -> None:
        super().__init__(
            mu, feature_map.input_dim, feature_map.num_features, init, allow_zero_step
        )
        self.feature_map = feature_map

    def _features(self, x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return self.feature_map.map(x)

    def _output(self, features: NDArray[np.complex128]) -> complex:
        return complex(np.vdot(self.weights, features))

    def predict_batch(self, inputs: ArrayLike) -> NDArray[np.complex128]:
        values = np.asarray(inputs, dtype=np.complex128)
        out = np.empty(len(values), dtype=np.complex128)
        for start in range(0, len(values), PREDICT_BATCH_CHUNK):
            chunk = values[start : start + PREDICT_BATCH_CHUNK]
            out[start : start + len(chunk)] = (
                self.feature_map.map_batch(chunk) @ self.weights.conj()
            )
        return out

    def _adapt(
        self,
        x: NDArray[np.complex128],
        features: NDArray[np.complex128],
        error: complex,
    ) -> None:
        self.weights += self.mu * error.conjugate() * features


class WlrecfFilter(_WeightVectorFilter):
    """Widely-linear random Euler complex-valued filter.

    ``weights`` is the augmented vector ``[u; v]``; ``u`` and ``v`` are views.
    """

    kind = FilterKind.WLRECF

    def __init__(
        self,
        mu: float,
        feature_map: EulerFeatureMap,
        init: ArrayLike | None = None,
        allow_zero_step: bool = False,
    ) -> None:
        super().__init__(
            mu,
            feature_map.input_dim,
            2 * feature_map.num_features,
            init,
            allow_zero_step,
        )
        self.feature_map = feature_map

    @property
    def u(self) -> NDArray[np.complex128]:
        return self.weights[: self.feature_map.num_features]

    @property
    def v(self) -> NDArray[np.complex128]:
        return self.weights[self.feature_map.num_features :]

    def _features(self, x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return self.feature_map.map(x)

    def _output(self, features: NDArray[np.complex128]) -> complex:
        # Halves are summed separately so a zero v contributes exactly nothing.
        return complex(np.vdot(self.u, features) + np.vdot(self.v, features.conj()))

    def predict_batch(self, inputs: ArrayLike) -> NDArray[np.complex128]:
        values = np.asarray(inputs, dtype=np.complex128)
        out = np.empty(len(values), dtype=np.complex128)
        for start in range(0, len(values), PREDICT_BATCH_CHUNK):
            chunk = values[start : start + PREDICT_BATCH_CHUNK]
            features = self.feature_map.map_batch(chunk)
            out[start : start + len(chunk)] = (
                features @ self.u.conj() + features.conj() @ self.v.conj()
            )
        return out

    def _adapt(
        self,
        x: NDArray[np.complex128],
        features: NDArray[np.complex128],
        error: complex,
    ) -> None:
        step = self.mu * error.conjugate()
        self.weights[: self.feature_map.num_features] += step * features
        self.weights[self.feature_map.num_features :] += step * features.conj()


class CklmsFilter(AdaptiveFilter):
    """Complex kernel LMS with one dictionary entry per training sample.

    Centers are kept as stacked real vectors in a buffer that doubles on demand,
    so each prediction costs time linear in the dictionary size.
    """

    kind = FilterKind.CKLMS

    def __init__(
        self,
        mu: float,
        m: int,
        kernel_sigma2: float,
        max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY,
        allow_zero_step: bool = False,
    ) -> None:
        super().__init__(mu, m, allow_zero_step)
        if not kernel_sigma2 > 0:
            raise InvalidParameterError(
                f"kernel_sigma2 must be positive, got {kernel_sigma2}"
            )
        if max_dictionary <= 0:
            raise InvalidParameterError(
                f"max_dictionary must be positive, got {max_dictionary}"
            )
        self.kernel_sigma2 = float(kernel_sigma2)
        self.max_dictionary = max_dictionary
        self._inputs = np.zeros((16, m), dtype=np.complex128)
        self._centers = np.zeros((16, 2 * m), dtype=np.float64)
        self._coefficients = np.zeros(16, dtype=np.complex128)

    @property
    def dictionary(self) -> list[tuple[NDArray[np.complex128], complex]]:
        """Stored ``(input, alpha)`` pairs in insertion order."""
        n = self.update_count
        return [
            (self._inputs[i].copy(), complex(self._coefficients[i])) for i in range(n)
        ]

    def _kernel_row(
        self, centers: NDArray[np.float64], v: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        diff = centers - v
        return np.exp(-0.5 * self.kernel_sigma2 * np.einsum("ij,ij->i", diff, diff))

    def _features(self, x: NDArray[np.complex128]) -> NDArray[np.float64]:
        return stack_real(x)

    def _output(self, features: NDArray[np.float64]) -> complex:
        n = self.update_count
        if n == 0:
            return 0j
        kernel = self._kernel_row(self._centers[:n], features)
        return complex(2.0 * np.dot(self._coefficients[:n], kernel))

    def predict_batch(self, inputs: ArrayLike) -> NDArray[np.complex128]:
        values = np.asarray(inputs, dtype=np.complex128)
        n = self.update_count
        out = np.zeros(len(values), dtype=np.complex128)
        if n == 0:
            return out
        centers = self._centers[:n]
        norms = np.einsum("ij,ij->i", centers, centers)
        chunk_size = max(1, 2**22 // n)
        for start in range(0, len(values), chunk_size):
            v = stack_real(values[start : start + chunk_size])
            sq = (
                np.einsum("ij,ij->i", v, v)[:, None]
                + norms[None, :]
                - 2.0 * v @ centers.T
            )
            kernel = np.exp(-0.5 * self.kernel_sigma2 * np.maximum(sq, 0.0))
            out[start : start + len(v)] = 2.0 * kernel @ self._coefficients[:n]
        return out

    def _adapt(
        self,
        x: NDArray[np.complex128],
        features: NDArray[np.float64],
        error: complex,
    ) -> None:
        n = self.update_count
        if n >= self.max_dictionary:
            raise DictionaryCapacityError(
                f"CKLMS dictionary reached its cap of {self.max_dictionary} entries"
            )
        if n == len(self._coefficients):
            capacity = min(2 * n, self.max_dictionary)
            self._inputs = np.resize(self._inputs, (capacity, self.m))
            self._centers = np.resize(self._centers, (capacity, 2 * self.m))
            self._coefficients = np.resize(self._coefficients, capacity)
        self._inputs[n] = x
        self._centers[n] = features
        self._coefficients[n] = self.mu * error

    def _is_finite(self) -> bool:
        return bool(np.isfinite(self._coefficients[self.update_count - 1]))


def create_filter(
    kind: FilterKind | str,
    mu: float,
    m: int,
    feature_map: EulerFeatureMap | None = None,
    init: ArrayLike | None = None,
    kernel_sigma2: float | None = None,
    max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY,
    allow_zero_step: bool = False,
) -> AdaptiveFilter:
    """Build a zero-initialised (or ``init``-valued) filter of the given kind.

    ``allow_zero_step`` admits ``mu = 0`` and exists for tests that need a frozen
    filter.
    """
    kind = FilterKind(kind)
    if kind is FilterKind.CLMS:
        return ClmsFilter(mu, m, init, allow_zero_step)
    if kind is FilterKind.CKLMS:
        if init is not None:
            raise InvalidParameterError("CKLMS does not accept initial weights")
        if kernel_sigma2 is None:
            if feature_map is None:
                raise InvalidParameterError("CKLMS requires kernel_sigma2")
            kernel_sigma2 = feature_map.sigma2
        return CklmsFilter(mu, m, kernel_sigma2, max_dictionary, allow_zero_step)

    if feature_map is None:
        raise InvalidParameterError(f"{kind.value.upper()} requires a feature map")
    if feature_map.input_dim != m:
        raise DimensionMismatchError("feature map input", m, feature_map.input_dim)
    if kind is FilterKind.LRECF:
        return LrecfFilter(mu, feature_map, init, allow_zero_step)
    return WlrecfFilter(mu, feature_map, init, allow_zero_step)
