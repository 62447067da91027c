"""Subarray ULA layout and the spherical-wavefront array response."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Scalar sine used at every (angle -> sine) conversion in the package.
# One code path keeps dictionary atoms and directly evaluated responses
# bit-identical.
def _sin(theta: float) -> float:
    return float(np.sin(theta))


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array of ``num_subarrays`` blocks along the z-axis.

    Each subarray holds ``antennas_per_subarray`` elements spaced
    ``antenna_spacing`` apart; subarray origins are ``subarray_spacing``
    apart.  ``antenna_coords`` are the element z-coordinates in meters,
    subarray-major (subarray index outer, element index inner) and
    translated so that the array is symmetric about z = 0 -- all angles
    and distances in the package are taken with respect to that center.
    """

    num_subarrays: int
    antennas_per_subarray: int
    antenna_spacing: float
    subarray_spacing: float
    wavelength: float
    antenna_coords: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        """Total element count."""
        return self.num_subarrays * self.antennas_per_subarray

    @property
    def aperture(self) -> float:
        """Nominal aperture: subarray count times subarray spacing."""
        return self.num_subarrays * self.subarray_spacing

    def subarray_slice(self, m: int) -> slice:
        n = self.antennas_per_subarray
        return slice(m * n, (m + 1) * n)


@dataclass(frozen=True)
class PolarPoint:
    """Source location: angle (radians) and range (meters) from array center."""

    theta: float
    r: float

    def __post_init__(self) -> None:
        if not (-math.pi / 2 < self.theta < math.pi / 2):
            raise ValueError(f"angle must lie in (-pi/2, pi/2), got {self.theta}")
        if not self.r > 0:
            raise ValueError(f"range must be positive, got {self.r}")


def build_geometry(
    num_subarrays: int,
    antennas_per_subarray: int,
    antenna_spacing: float,
    subarray_spacing: float,
    wavelength: float,
) -> ArrayGeometry:
    """Lay out the array and center it on z = 0.

    Raw offsets are ``m * subarray_spacing + n * antenna_spacing``; the
    common translation ``(max + min) / 2`` is removed afterwards.
    """
    if num_subarrays < 1 or antennas_per_subarray < 1:
        raise ValueError("need at least one subarray and one antenna per subarray")
    if antenna_spacing <= 0 or wavelength <= 0:
        raise ValueError("antenna spacing and wavelength must be positive")
    if subarray_spacing < antennas_per_subarray * antenna_spacing:
        raise ValueError(
            "subarrays overlap: subarray spacing "
            f"{subarray_spacing} is below {antennas_per_subarray} * {antenna_spacing}"
        )
    m = np.arange(num_subarrays)[:, None] * subarray_spacing
    n = np.arange(antennas_per_subarray)[None, :] * antenna_spacing
    offsets = (m + n).ravel()
    coords = offsets - (offsets.max() + offsets.min()) / 2.0
    coords.flags.writeable = False
    return ArrayGeometry(
        num_subarrays=num_subarrays,
        antennas_per_subarray=antennas_per_subarray,
        antenna_spacing=antenna_spacing,
        subarray_spacing=subarray_spacing,
        wavelength=wavelength,
        antenna_coords=coords,
    )


def element_distance(point: PolarPoint, z) -> np.ndarray | float:
    """Distance from a source at ``point`` to the element at coordinate ``z``.

    Law of cosines about the array center:
    ``sqrt(r^2 - 2 r z sin(theta) + z^2)``.
    """
    return _distance(_sin(point.theta), point.r, z)


def _distance(sin_theta: float, r: float, z) -> np.ndarray | float:
    return np.sqrt(r * r - 2.0 * r * np.asarray(z) * sin_theta + np.square(z))


def _response(geometry: ArrayGeometry, sin_theta: float, r: float) -> np.ndarray:
    """Unit-norm spherical-wave steering vector for (sin(theta), r).

    Single code path shared with the dictionary builders so that grid
    atoms and directly evaluated responses agree bit for bit.
    """
    z = geometry.antenna_coords
    excess = _distance(sin_theta, r, z) - r
    phase = (2.0 * np.pi / geometry.wavelength) * excess
    return np.exp(-1j * phase) / np.sqrt(geometry.size)


def array_response(geometry: ArrayGeometry, point: PolarPoint) -> np.ndarray:
    """Near-field array response at ``point``; unit l2 norm, length MN.

    Entry order follows ``antenna_coords`` (subarray-major).
    """
    return _response(geometry, _sin(point.theta), point.r)


def fraunhofer_distance(geometry: ArrayGeometry) -> float:
    """Far-field boundary ``2 * aperture^2 / wavelength``."""
    return 2.0 * geometry.aperture**2 / geometry.wavelength
