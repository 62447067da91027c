"""Channel estimators: PD-ZALMS adaptive filtering and greedy/LS baselines.

All estimators map a :class:`~nfse.measurement.MeasurementSet` to an
:class:`EstimateResult` holding the polar-domain coefficients and the
reconstructed antenna-domain channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from nfse.channel import PathSet
from nfse.core import ls_solve
from nfse.dictionary import nearest_grid_index
from nfse.measurement import MeasurementSet

_EPS = float(np.finfo(float).eps)


class DivergenceError(RuntimeError):
    """The adaptive filter blew up instead of converging."""


@dataclass(frozen=True)
class ZalmsConfig:
    """Tuning of the zero-attracting LMS iteration.

    ``step_size`` scales the stochastic-gradient correction and
    ``attractor_step`` the sparsity pull; ``attractor_step`` absorbs the
    usual mu * lambda / 2 combination of step size and penalty weight,
    so it is the quantity applied per iteration as-is.  ``sharpness``
    controls how tightly the smooth penalty ``1 - exp(-sharpness |x|)``
    hugs an indicator of nonzero entries.  The iteration stops once the
    relative iterate change drops below ``rel_tolerance`` or after
    ``max_iters`` steps.  ``single_precision`` runs the inner loop in
    complex64, roughly halving time per iteration; estimates are
    returned in double either way.
    """

    step_size: float
    attractor_step: float = 0.0
    sharpness: float = 25.0
    max_iters: int = 5000
    rel_tolerance: float = 1e-6
    single_precision: bool = False

    def __post_init__(self) -> None:
        if self.step_size <= 0:
            raise ValueError(f"step size must be positive, got {self.step_size}")
        if self.attractor_step < 0:
            raise ValueError(f"attractor step must be >= 0, got {self.attractor_step}")
        if self.sharpness <= 0:
            raise ValueError(f"sharpness must be positive, got {self.sharpness}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tolerance < 0:
            raise ValueError(f"rel_tolerance must be >= 0, got {self.rel_tolerance}")


@dataclass(frozen=True)
class EstimateResult:
    """Polar-domain estimate, reconstructed channel, and iteration trace."""

    eta_hat: np.ndarray = field(repr=False)
    h_hat: np.ndarray = field(repr=False)
    iterations_run: int
    residual_history: np.ndarray = field(repr=False)


def attractor_gradient(eta: np.ndarray, sharpness: float) -> np.ndarray:
    """Gradient of the smooth sparsity penalty ``sum(1 - exp(-a |x_i|))``.

    Elementwise ``a * exp(-a |x|) * sign(x)`` with the complex sign
    ``x / |x|`` (zero at zero), which shrinks magnitudes without
    rotating phases.
    """
    if sharpness <= 0:
        raise ValueError(f"sharpness must be positive, got {sharpness}")
    mag = np.abs(eta)
    sign = np.divide(eta, mag, out=np.zeros_like(eta), where=mag > 0)
    return (sharpness * np.exp(-sharpness * mag)) * sign


def pd_zalms(measurement: MeasurementSet, config: ZalmsConfig) -> EstimateResult:
    """Zero-attracting LMS over the polar-domain sensing model.

    Starting from zero coefficients, each iteration forms the
    observation error ``e = y - psi @ eta`` and updates

    ``eta <- eta + mu * psi^H e - delta * attractor_gradient(eta)``

    using only matrix-vector products (nothing of size ``columns^2`` is
    ever formed), so an iteration costs two passes over ``psi``.
    """
    dtype = np.complex64 if config.single_precision else np.complex128
    real_dtype = np.float32 if config.single_precision else np.float64
    psi = np.ascontiguousarray(measurement.psi, dtype=dtype)
    y = np.ascontiguousarray(measurement.y_tilde, dtype=dtype)
    mu = real_dtype(config.step_size)
    delta = real_dtype(config.attractor_step)
    y_norm = float(np.linalg.norm(y))

    eta = np.zeros(psi.shape[1], dtype=dtype)
    err = np.empty(psi.shape[0], dtype=dtype)
    grad = np.empty(psi.shape[1], dtype=dtype)
    history = []
    iterations = 0
    for _ in range(config.max_iters):
        np.matmul(psi, eta, out=err)
        np.subtract(y, err, out=err)
        err_norm = float(np.linalg.norm(err))
        iterations += 1
        history.append(err_norm)
        if err_norm > 1e6 * y_norm:
            raise DivergenceError(
                f"observation error exploded after {iterations} iterations; "
                f"step size {config.step_size} is likely too large for this "
                "sensing matrix"
            )
        # psi^H e computed as conj(conj(e)^T psi): the row-vector product
        # rereads the same psi buffer the forward product just touched,
        # halving the per-iteration memory traffic.
        np.conjugate(err, out=err)
        np.matmul(err, psi, out=grad)
        np.conjugate(grad, out=grad)
        new_eta = eta + mu * grad
        if config.attractor_step > 0:
            new_eta -= delta * attractor_gradient(eta, config.sharpness)
        change = float(np.linalg.norm(new_eta - eta))
        scale = max(float(np.linalg.norm(eta)), _EPS)
        eta = new_eta
        if change / scale < config.rel_tolerance:
            break

    eta_hat = eta.astype(np.complex128)
    h_hat = measurement.dictionary.atoms @ eta_hat
    return EstimateResult(
        eta_hat=eta_hat,
        h_hat=h_hat,
        iterations_run=iterations,
        residual_history=np.asarray(history),
    )


class OmpResult(NamedTuple):
    support: list[int]
    coefficients: np.ndarray
    residual_norms: list[float]


def omp(y: np.ndarray, columns: np.ndarray, sparsity: int) -> OmpResult:
    """Orthogonal matching pursuit: greedy atom selection with LS refit.

    Each of the ``sparsity`` rounds picks the unselected column with the
    largest normalized correlation ``|a_j^H r| / ||a_j||`` against the
    current residual (ties to the smaller index), refits all selected
    coefficients by least squares, and updates the residual.  Stops
    early only on an exactly zero observation or residual.
    """
    if sparsity < 1:
        raise ValueError(f"sparsity must be >= 1, got {sparsity}")
    if sparsity > columns.shape[0]:
        raise ValueError(
            f"sparsity {sparsity} exceeds the {columns.shape[0]} observations"
        )
    if np.linalg.norm(y) == 0.0:
        return OmpResult([], np.zeros(0, dtype=columns.dtype), [])
    norms = np.linalg.norm(columns, axis=0)
    norms = np.where(norms > 0, norms, np.inf)  # zero columns are never picked
    residual = y
    support: list[int] = []
    coeffs = np.zeros(0, dtype=columns.dtype)
    residual_norms: list[float] = []
    for _ in range(sparsity):
        corr = np.abs(columns.conj().T @ residual) / norms
        if support:
            corr[support] = -1.0
        support.append(int(np.argmax(corr)))
        coeffs = ls_solve(columns[:, support], y)
        residual = y - columns[:, support] @ coeffs
        residual_norms.append(float(np.linalg.norm(residual)))
        if residual_norms[-1] == 0.0:
            break
    return OmpResult(support, coeffs, residual_norms)


def _lift(measurement: MeasurementSet, support: list[int], coeffs: np.ndarray,
          residual_norms: list[float]) -> EstimateResult:
    eta_hat = np.zeros(measurement.psi.shape[1], dtype=complex)
    eta_hat[support] = coeffs
    return EstimateResult(
        eta_hat=eta_hat,
        h_hat=measurement.dictionary.atoms @ eta_hat,
        iterations_run=len(residual_norms),
        residual_history=np.asarray(residual_norms),
    )


def pd_omp(measurement: MeasurementSet, sparsity: int) -> EstimateResult:
    """Matching pursuit over the full polar-domain sensing matrix."""
    result = omp(measurement.y_tilde, measurement.psi, sparsity)
    return _lift(measurement, result.support, result.coefficients, result.residual_norms)


def mad_omp(
    measurement: MeasurementSet,
    angular_blocks: list[np.ndarray],
    sparsity: int,
) -> EstimateResult:
    """Independent per-subarray matching pursuit on angular dictionaries.

    Subarray ``m`` recovers its own N-entry channel from its Q
    observations using planar-wavefront atoms; the per-subarray
    reconstructions are stacked into the full channel.  ``eta_hat``
    holds the concatenated per-subarray angular coefficients, and
    ``h_hat`` is assembled from the angular blocks rather than the
    polar dictionary.
    """
    sampling = measurement.sampling
    num_angles = angular_blocks[0].shape[1]
    eta_parts = []
    h_parts = []
    per_round: list[list[float]] = []
    for m, block in enumerate(angular_blocks):
        sensed = sampling.blocks[m].conj().T @ block
        result = omp(measurement.subarray_observation(m), sensed, sparsity)
        eta_m = np.zeros(num_angles, dtype=complex)
        eta_m[result.support] = result.coefficients
        eta_parts.append(eta_m)
        h_parts.append(block @ eta_m)
        per_round.append(result.residual_norms)
    rounds = max((len(r) for r in per_round), default=0)
    history = [
        float(
            np.sqrt(
                sum(r[min(k, len(r) - 1)] ** 2 for r in per_round if r)
            )
        )
        for k in range(rounds)
    ]
    return EstimateResult(
        eta_hat=np.concatenate(eta_parts),
        h_hat=np.concatenate(h_parts),
        iterations_run=rounds,
        residual_history=np.asarray(history),
    )


def oracle_ls(measurement: MeasurementSet, true_paths: PathSet) -> EstimateResult:
    """Least squares on the true grid support.

    The support is the nearest grid node of every true path
    (deduplicated); only the coefficients are estimated.  An informed
    baseline, not a practical estimator.
    """
    if np.linalg.norm(measurement.y_tilde) == 0.0:
        return _lift(measurement, [], np.zeros(0, dtype=complex), [])
    grid = measurement.dictionary.grid
    support = sorted({nearest_grid_index(grid, p) for p in true_paths.points})
    coeffs = ls_solve(measurement.psi[:, support], measurement.y_tilde)
    residual = measurement.y_tilde - measurement.psi[:, support] @ coeffs
    return _lift(measurement, support, coeffs, [float(np.linalg.norm(residual))])
