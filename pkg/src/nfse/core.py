"""Seedable random generation and the dense complex kernels shared by all modules.

Conventions used throughout the package:

* Randomness comes from ``numpy.random.Generator`` seeded with PCG64
  (``make_rng``).  The same 64-bit seed reproduces the same stream on
  every platform; no global state is ever touched.
* Matrices are 2-D ``numpy`` arrays in the default (row-major) layout,
  indexed ``[row, column]``; vectors are 1-D arrays treated as column
  vectors by the math.
"""

from __future__ import annotations

import numpy as np

# Relative singular-value cutoff below which a least-squares system is
# treated as rank deficient.  Polar dictionaries can hand OMP nearly
# collinear atoms; failing loudly beats returning garbage coefficients.
RANK_RTOL = 1e-10


class RankDeficiencyError(ValueError):
    """Least-squares system is numerically rank deficient."""


def make_rng(seed: int) -> np.random.Generator:
    """Return a PCG64 generator for ``seed``."""
    return np.random.default_rng(seed)


def complex_gaussian(rng: np.random.Generator, n: int, variance: float) -> np.ndarray:
    """Draw ``n`` i.i.d. circularly-symmetric complex Gaussian samples.

    Each entry has total variance ``variance`` split evenly between the
    real and imaginary parts.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw an ``n x n`` unitary matrix, Haar-like.

    QR of an i.i.d. complex Gaussian matrix with the phases of the R
    diagonal folded into Q, so the distribution does not depend on the
    QR sign convention.
    """
    if n < 1:
        raise ValueError(f"matrix size must be >= 1, got {n}")
    a = complex_gaussian(rng, n * n, 1.0).reshape(n, n)
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r).copy()
    diag = np.where(diag == 0, 1.0, diag / np.abs(diag))
    return q * diag


def ls_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``min_x ||a x - b||_2`` for a tall full-column-rank ``a``.

    Uses the SVD-backed LAPACK driver (never explicit normal
    equations).  Raises :class:`RankDeficiencyError` when the smallest
    singular value falls below ``RANK_RTOL`` times the largest.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D system matrix, got ndim={a.ndim}")
    m, k = a.shape
    if not (m >= k >= 1):
        raise ValueError(f"need rows >= cols >= 1, got shape {a.shape}")
    if b.shape != (m,):
        raise ValueError(f"rhs length {b.shape} does not match {m} rows")
    x, _, _, sv = np.linalg.lstsq(a, b, rcond=None)
    if sv[0] == 0 or sv[-1] / sv[0] < RANK_RTOL:
        raise RankDeficiencyError(
            f"system is rank deficient: singular value ratio "
            f"{0.0 if sv[0] == 0 else sv[-1] / sv[0]:.2e} below {RANK_RTOL:.0e}"
        )
    return x
