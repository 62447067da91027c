"""Pilots, analog sampling, noisy uplink simulation, and the sensing matrix.

Everything between the antenna-domain channel and the compressed
observation the estimators consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nfse.core import complex_gaussian, random_unitary
from nfse.dictionary import Dictionary
from nfse.geometry import ArrayGeometry


@dataclass(frozen=True)
class PilotMatrix:
    """Q x U orthogonal pilot matrix with unit-magnitude entries."""

    matrix: np.ndarray = field(repr=False)

    @property
    def pilot_length(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_users(self) -> int:
        return self.matrix.shape[1]


def build_pilots(pilot_length: int, num_users: int) -> PilotMatrix:
    """Assign users distinct columns of the Q-point DFT matrix.

    Unit-magnitude symbols with exact orthogonality:
    ``P^H P = Q I``.
    """
    if num_users < 1:
        raise ValueError("need at least one user")
    if pilot_length < num_users:
        raise ValueError(
            f"pilot length {pilot_length} cannot separate {num_users} users"
        )
    q = np.arange(pilot_length)[:, None]
    u = np.arange(num_users)[None, :]
    matrix = np.exp(-2j * np.pi * q * u / pilot_length)
    matrix.flags.writeable = False
    return PilotMatrix(matrix=matrix)


@dataclass(frozen=True)
class SamplingMatrix:
    """Per-subarray analog combining: M blocks of shape N x Q.

    Each block has orthonormal columns; the assembled operator is their
    block diagonal, mapping MN antenna samples to MQ observations.
    """

    blocks: tuple[np.ndarray, ...]

    @property
    def num_subarrays(self) -> int:
        return len(self.blocks)

    @property
    def pilot_length(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def antennas_per_subarray(self) -> int:
        return self.blocks[0].shape[0]

    def full(self) -> np.ndarray:
        """Assembled block-diagonal MN x MQ matrix."""
        n, q = self.blocks[0].shape
        m = self.num_subarrays
        out = np.zeros((m * n, m * q), dtype=complex)
        for i, block in enumerate(self.blocks):
            out[i * n : (i + 1) * n, i * q : (i + 1) * q] = block
        return out

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        """Compute ``W^H x`` block by block; x may be a vector or matrix."""
        n = self.antennas_per_subarray
        return np.concatenate(
            [block.conj().T @ x[i * n : (i + 1) * n] for i, block in enumerate(self.blocks)]
        )


def build_sampling_matrix(
    rng: np.random.Generator, geometry: ArrayGeometry, pilot_length: int
) -> SamplingMatrix:
    """Draw one random sampling block per subarray.

    Block ``m`` is ``U [I_Q; 0] V^H`` with independent Haar-like unitary
    U (N x N) and V (Q x Q), i.e. a random Q-dimensional orthonormal
    frame inside the subarray's N-dimensional space.
    """
    n = geometry.antennas_per_subarray
    if not 1 <= pilot_length <= n:
        raise ValueError(
            f"pilot length must lie in [1, {n}] to fit the phase-shifter "
            f"network, got {pilot_length}"
        )
    blocks = []
    for _ in range(geometry.num_subarrays):
        u = random_unitary(rng, n)
        v = random_unitary(rng, pilot_length)
        block = u[:, :pilot_length] @ v.conj().T
        block.flags.writeable = False
        blocks.append(block)
    return SamplingMatrix(blocks=tuple(blocks))


@dataclass(frozen=True)
class MeasurementSet:
    """One compressed, noisy observation plus the operators that made it.

    ``y_tilde = W^H h + noise`` (MQ entries) and ``psi = W^H G`` so the
    polar-domain model reads ``y_tilde = psi @ eta + noise``.
    ``noise_variance`` is the per-antenna variance before pilot
    correlation; the per-entry variance of the noise in ``y_tilde`` is
    ``noise_variance / Q``.
    """

    y_tilde: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    noise_variance: float
    snr: float
    sampling: SamplingMatrix
    dictionary: Dictionary

    @property
    def pilot_length(self) -> int:
        return self.sampling.pilot_length

    @property
    def num_subarrays(self) -> int:
        return self.sampling.num_subarrays

    def subarray_observation(self, m: int) -> np.ndarray:
        q = self.pilot_length
        return self.y_tilde[m * q : (m + 1) * q]


def simulate_uplink(
    rng: np.random.Generator,
    channels: np.ndarray,
    pilots: PilotMatrix,
    noise_variance: float,
) -> np.ndarray:
    """Received training block ``Y = H P^H + Z`` of shape MN x Q.

    ``channels`` stacks the per-user channel vectors as columns;
    ``Z`` has i.i.d. complex Gaussian entries of the given variance,
    drawn row-major.
    """
    channels = np.atleast_2d(channels.T).T  # promote a single vector to MN x 1
    mn, num_users = channels.shape
    if num_users != pilots.num_users:
        raise ValueError(f"{num_users} channels for {pilots.num_users} pilots")
    q = pilots.pilot_length
    noise = complex_gaussian(rng, mn * q, noise_variance).reshape(mn, q)
    return channels @ pilots.matrix.conj().T + noise


def post_process(
    received: np.ndarray, sampling: SamplingMatrix, pilot: np.ndarray
) -> np.ndarray:
    """Analog sampling plus pilot correlation for one user.

    Returns ``(1 / Q) W^H Y p``.  With orthogonal unit-magnitude pilots
    the 1/Q factor makes the signal part exactly ``W^H h`` and leaves
    noise of per-entry variance ``sigma^2 / Q``.
    """
    q = len(pilot)
    return sampling.apply_adjoint(received @ pilot) / q


def measure(
    rng: np.random.Generator,
    h: np.ndarray,
    sampling: SamplingMatrix,
    dictionary: Dictionary,
    snr: float,
) -> MeasurementSet:
    """Single-user observation of channel ``h`` at a given linear SNR.

    SNR is referenced to unit average per-antenna channel power, so the
    per-antenna noise variance is ``1 / snr``; pilot correlation over Q
    symbols reduces it to ``1 / (snr Q)`` per observation entry.
    Equivalent to ``simulate_uplink`` followed by ``post_process`` with
    a shared noise draw.
    """
    if snr <= 0:
        raise ValueError(f"linear snr must be positive, got {snr}")
    noise_variance = 1.0 / snr if math.isfinite(snr) else 0.0
    q = sampling.pilot_length
    mq = sampling.num_subarrays * q
    noise = complex_gaussian(rng, mq, noise_variance / q)
    y_tilde = sampling.apply_adjoint(h) + noise
    n = sampling.antennas_per_subarray
    psi = np.vstack(
        [
            block.conj().T @ dictionary.atoms[i * n : (i + 1) * n, :]
            for i, block in enumerate(sampling.blocks)
        ]
    )
    y_tilde.flags.writeable = False
    psi.flags.writeable = False
    return MeasurementSet(
        y_tilde=y_tilde,
        psi=psi,
        noise_variance=noise_variance,
        snr=snr,
        sampling=sampling,
        dictionary=dictionary,
    )
