"""Numerical mean and mean-square convergence analysis.

The weight-error covariance ``C_n = E{w~_n w~_n^H}`` of the (widely-linear)
random Euler filter under a random-walk optimum obeys

    vec(C_n) = (I - mu A + mu^2 B) vec(C_{n-1}) + mu^2 s_v^2 vec(Rz) + s_q^2 vec(I)

with ``A = I (x) Rz + Rz* (x) I`` and ``B = E{(z* z^T) (x) (z z^H)}``. ``vec`` stacks
columns. Quadratic forms ``vec(Rz)^H (.)`` are Hermitian inner products so they equal
``trace(Rz C)`` for Hermitian ``C``.
"""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .config import DEFAULT_MAX_THEORY_DIM
from .exceptions import (
    InvalidParameterError,
    NumericalError,
    ResourceLimitError,
    SingularMatrixError,
)
from .feature_map import EulerFeatureMap
from .scenarios import SourceSpec, draw_input

logger = logging.getLogger(__name__)

MOMENT_BLOCK_SIZE = 2048
PSD_TOLERANCE = 1e-10
MAX_CONDITION = 1e14

RegressorSampler = Callable[[np.random.Generator, int], NDArray[np.complex128]]


def vec(matrix: ArrayLike) -> NDArray[np.complex128]:
    """Column-major stacking."""
    return np.asarray(matrix, dtype=np.complex128).reshape(-1, order="F")


def unvec(vector: ArrayLike, size: int) -> NDArray[np.complex128]:
    return np.asarray(vector, dtype=np.complex128).reshape(size, size, order="F")


def assemble_a(rz: NDArray[np.complex128]) -> NDArray[np.complex128]:
    identity = np.eye(rz.shape[0], dtype=np.complex128)
    return np.kron(identity, rz) + np.kron(rz.conj(), identity)


def _hermitian_part(matrix: NDArray[np.complex128]) -> NDArray[np.complex128]:
    return 0.5 * (matrix + matrix.conj().T)


@dataclass(frozen=True, slots=True, eq=False)
class Moments:
    """Feature moments ``Rz`` (L x L), ``A`` and ``B`` (L^2 x L^2)."""

    dim: int
    rz: NDArray[np.complex128]
    a: NDArray[np.complex128]
    b: NDArray[np.complex128]
    n_samples: int
    seed: int
    augmented: bool = True

    @classmethod
    def from_matrices(
        cls,
        rz: ArrayLike,
        b: ArrayLike | None = None,
        n_samples: int = 0,
        seed: int = 0,
        augmented: bool = True,
    ) -> "Moments":
        """Build moments from known matrices; ``B`` defaults to zero."""
        rz_matrix = _hermitian_part(np.asarray(rz, dtype=np.complex128))
        dim = rz_matrix.shape[0]
        b_matrix = (
            np.zeros((dim * dim, dim * dim), dtype=np.complex128)
            if b is None
            else np.asarray(b, dtype=np.complex128)
        )
        return cls(
            dim, rz_matrix, assemble_a(rz_matrix), b_matrix, n_samples, seed, augmented
        )

    @property
    def vec_rz(self) -> NDArray[np.complex128]:
        return vec(self.rz)

    @property
    def vec_identity(self) -> NDArray[np.complex128]:
        return vec(np.eye(self.dim))


def _regressor_sampler(
    source: SourceSpec | RegressorSampler, m: int
) -> RegressorSampler:
    if callable(source):
        return source

    def sample(rng: np.random.Generator, n: int) -> NDArray[np.complex128]:
        # Only the marginal law of one regressor matters: m i.i.d. samples.
        return draw_input(source, n * m, rng).reshape(n, m)

    return sample


def estimate_moments(
    fm: EulerFeatureMap,
    source: SourceSpec | RegressorSampler,
    augmented: bool = True,
    n_samples: int = 100_000,
    seed: int = 0,
    max_dim: int = DEFAULT_MAX_THEORY_DIM,
    workers: int = 1,
) -> Moments:
    """Monte Carlo estimates of ``Rz`` and ``B``; ``A`` is assembled from ``Rz``.

    Blocks use seeds spawned from ``seed`` and are reduced in block order, so the
    result does not depend on ``workers``.
    """
    if n_samples < 1:
        raise InvalidParameterError(f"n_samples must be >= 1, got {n_samples}")
    dim = fm.feature_dim(augmented)
    required_bytes = 3 * (dim**4) * 16
    if dim > max_dim:
        raise ResourceLimitError(
            f"feature dimension L={dim} exceeds the theory cap of {max_dim} "
            f"({required_bytes / 2**20:.1f} MiB of moment matrices)",
            required_bytes=required_bytes,
        )
    if n_samples < 10 * dim * dim:
        logger.warning(
            "n_samples=%d is below the recommended 10*L^2=%d", n_samples, 10 * dim**2
        )
    logger.info(
        "Estimating moments for L=%d from %d samples (~%.1f MiB)",
        dim,
        n_samples,
        required_bytes / 2**20,
    )

    sampler = _regressor_sampler(source, fm.input_dim)
    sizes = [MOMENT_BLOCK_SIZE] * (n_samples // MOMENT_BLOCK_SIZE)
    if n_samples % MOMENT_BLOCK_SIZE:
        sizes.append(n_samples % MOMENT_BLOCK_SIZE)
    block_seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def block(
        args: tuple[int, np.random.SeedSequence],
    ) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        size, block_seed = args
        inputs = sampler(np.random.default_rng(block_seed), size)
        z = fm.map_batch(inputs, augmented=augmented)
        k = (z.conj()[:, :, None] * z[:, None, :]).reshape(size, dim * dim)
        return z.T @ z.conj(), k.T @ k.conj()

    rz = np.zeros((dim, dim), dtype=np.complex128)
    b = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    jobs = list(zip(sizes, block_seeds, strict=True))
    workers = max(1, workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        # Bounded batches keep at most ``workers`` partial B matrices alive.
        for start in range(0, len(jobs), workers):
            for rz_part, b_part in executor.map(block, jobs[start : start + workers]):
                rz += rz_part
                b += b_part

    rz = _hermitian_part(rz / n_samples)
    b = _hermitian_part(b / n_samples)
    return Moments(dim, rz, assemble_a(rz), b, n_samples, seed, augmented)


def _largest_eigenvalue(rz: NDArray[np.complex128]) -> float:
    eigenvalues = scipy.linalg.eigvalsh(rz)
    largest = float(eigenvalues[-1])
    if eigenvalues[0] < -PSD_TOLERANCE * max(1.0, abs(largest)) or largest <= 0:
        raise NumericalError(
            f"Rz is not positive semidefinite (eigenvalues in "
            f"[{eigenvalues[0]:.3e}, {largest:.3e}])"
        )
    return largest


def mean_step_bound(mom: Moments) -> float:
    """Upper step-size bound ``2 / lambda_max(Rz)`` for stability in the mean."""
    return 2.0 / _largest_eigenvalue(mom.rz)


def small_step_bound(mom: Moments) -> float:
    """Bound ``2 / lambda_max(A)`` that applies when ``mu^2 B`` is negligible."""
    return 2.0 / float(scipy.linalg.eigvalsh(mom.a)[-1])


def transition_matrix(mom: Moments, mu: float) -> NDArray[np.complex128]:
    identity = np.eye(mom.dim * mom.dim, dtype=np.complex128)
    return identity - mu * mom.a + mu**2 * mom.b


def spectral_radius(matrix: NDArray[np.complex128]) -> float:
    # The transition matrix is Hermitian because A and B are.
    return float(np.max(np.abs(scipy.linalg.eigvalsh(matrix))))


class SteadyState(NamedTuple):
    mse: float
    msd: float
    condition_number: float


@dataclass(frozen=True, slots=True, eq=False)
class TheoryPrediction:
    """Predicted learning curves; index ``n`` holds iteration ``n + 1``."""

    mse: NDArray[np.float64]
    msd: NDArray[np.float64]
    mu: float
    sigma_v2: float
    sigma_q2: float
    n_steps: int
    c0: NDArray[np.complex128]
    spectral_radius: float
    steady: SteadyState | None

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0

    @property
    def mse_db(self) -> NDArray[np.float64]:
        return 10.0 * np.log10(self.mse)

    @property
    def msd_db(self) -> NDArray[np.float64]:
        return 10.0 * np.log10(self.msd)


def _check_noise(mu: float, sigma_v2: float, sigma_q2: float) -> None:
    if mu < 0:
        raise InvalidParameterError(f"step-size must be >= 0, got {mu}")
    if sigma_v2 < 0 or sigma_q2 < 0:
        raise InvalidParameterError("noise variances must be non-negative")


def transient_predict(
    mom: Moments,
    mu: float,
    sigma_v2: float,
    sigma_q2: float,
    n_steps: int,
    c0: ArrayLike | None = None,
) -> TheoryPrediction:
    """Iterate the covariance recursion for ``n_steps`` iterations.

    ``MSE_n = trace(Rz C_{n-1}) + sigma_v2`` and ``MSD_n = trace(C_n)``. An unstable
    recursion is only logged, so the diverging curves stay available for plots.
    """
    _check_noise(mu, sigma_v2, sigma_q2)
    if n_steps < 0:
        raise InvalidParameterError(f"n_steps must be >= 0, got {n_steps}")
    dim = mom.dim
    initial = (
        np.zeros((dim, dim), dtype=np.complex128)
        if c0 is None
        else np.asarray(c0, dtype=np.complex128)
    )
    if initial.shape != (dim, dim):
        raise InvalidParameterError(
            f"C0 must be {dim}x{dim}, got {'x'.join(map(str, initial.shape))}"
        )

    transition = transition_matrix(mom, mu)
    radius = spectral_radius(transition)
    if radius >= 1.0:
        logger.warning(
            "Covariance recursion is unstable for mu=%g (spectral radius %.6f)",
            mu,
            radius,
        )

    vec_rz = mom.vec_rz
    forcing = mu**2 * sigma_v2 * vec_rz + sigma_q2 * mom.vec_identity
    diagonal = np.arange(dim) * (dim + 1)
    c = vec(initial)
    mse = np.empty(n_steps)
    msd = np.empty(n_steps)
    for n in range(n_steps):
        mse[n] = np.vdot(vec_rz, c).real + sigma_v2
        c = transition @ c + forcing
        msd[n] = c[diagonal].real.sum()

    steady = None
    if radius < 1.0 and mu > 0:
        try:
            steady = steady_state(mom, mu, sigma_v2, sigma_q2)
        except NumericalError as exc:
            logger.warning("No closed-form steady state for mu=%g: %s", mu, exc)
    return TheoryPrediction(
        mse, msd, mu, sigma_v2, sigma_q2, n_steps, initial, radius, steady
    )


def steady_state(
    mom: Moments, mu: float, sigma_v2: float, sigma_q2: float
) -> SteadyState:
    """Closed-form steady-state MSE and MSD.

    ``vec(C_inf) = (A - mu B)^{-1} (mu s_v^2 vec(Rz) + (s_q^2 / mu) vec(I))``.
    """
    _check_noise(mu, sigma_v2, sigma_q2)
    if mu <= 0:
        raise InvalidParameterError(f"steady state needs mu > 0, got {mu}")
    system = mom.a - mu * mom.b
    condition = float(np.linalg.cond(system))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise SingularMatrixError(
            f"A - mu B is singular for mu={mu} (condition number {condition:.3e})"
        )
    rhs = mu * sigma_v2 * mom.vec_rz + (sigma_q2 / mu) * mom.vec_identity
    c_inf = scipy.linalg.lu_solve(scipy.linalg.lu_factor(system), rhs)
    mse = sigma_v2 + float(np.vdot(mom.vec_rz, c_inf).real)
    msd = float(unvec(c_inf, mom.dim).trace().real)
    if mse < 0 or msd < 0:
        raise NumericalError(
            f"negative steady state (MSE={mse:.3e}, MSD={msd:.3e}); the moment "
            "estimate is too noisy or mu is outside the stability region"
        )
    return SteadyState(mse, msd, condition)


def optimal_step_size(
    mom: Moments, sigma_v2: float, sigma_q2: float
) -> tuple[float, float]:
    """Step-size minimising the tracking MSE and the minimum it attains."""
    if not sigma_q2 > 0:
        raise InvalidParameterError(
            f"an optimal step-size needs sigma_q2 > 0, got {sigma_q2}"
        )
    if not sigma_v2 > 0:
        raise InvalidParameterError(f"sigma_v2 must be positive, got {sigma_v2}")
    condition = float(np.linalg.cond(mom.a))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise SingularMatrixError(f"A is singular (condition number {condition:.3e})")
    factor = scipy.linalg.lu_factor(mom.a)
    to_identity = scipy.linalg.lu_solve(factor, mom.vec_identity)
    to_rz = scipy.linalg.lu_solve(factor, mom.vec_rz)
    phi = float(np.vdot(mom.vec_rz, to_identity).real)
    varphi = float(np.vdot(mom.vec_rz, to_rz).real)
    if phi <= 0 or varphi <= 0:
        raise NumericalError(
            f"inconsistent moments: phi={phi:.3e}, varphi={varphi:.3e} must be positive"
        )
    sigma_v = np.sqrt(sigma_v2)
    sigma_q = np.sqrt(sigma_q2)
    mu_opt = float(sigma_q / sigma_v * np.sqrt(phi / varphi))
    mse_min = float(sigma_v2 + 2.0 * sigma_v * sigma_q * np.sqrt(varphi * phi))
    return mu_opt, mse_min


def initial_covariance(
    w_opt0: ArrayLike, w0: ArrayLike | None = None
) -> NDArray[np.complex128]:
    """``C0 = (w_opt,0 - w_0)(w_opt,0 - w_0)^H`` for a deterministic start."""
    target = np.asarray(w_opt0, dtype=np.complex128)
    start = np.zeros_like(target) if w0 is None else np.asarray(w0, dtype=np.complex128)
    diff = target - start
    return np.outer(diff, diff.conj())
