"""Random clustered-multipath near-field channel synthesis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nfse.core import complex_gaussian
from nfse.dictionary import PolarGrid
from nfse.geometry import ArrayGeometry, PolarPoint, _response, _sin, fraunhofer_distance

# Experiment default: path directions are confined to |sin(theta)| <= 0.75.
DEFAULT_SIN_RANGE = (-0.75, 0.75)


@dataclass(frozen=True)
class PathSet:
    """L propagation paths: complex gains plus polar locations."""

    gains: np.ndarray
    points: tuple[PolarPoint, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise ValueError("a path set needs at least one path")
        if len(self.gains) != len(self.points):
            raise ValueError(
                f"{len(self.gains)} gains for {len(self.points)} points"
            )

    def __len__(self) -> int:
        return len(self.points)


def sample_paths(
    rng: np.random.Generator,
    num_paths: int,
    geometry: ArrayGeometry,
    r_min: float,
    sin_range: tuple[float, float] = DEFAULT_SIN_RANGE,
) -> PathSet:
    """Draw paths with continuous uniform sin(angle) and range.

    ``sin(theta)`` is uniform on ``sin_range``, the range uniform on
    ``[r_min, fraunhofer_distance)``, and gains are i.i.d. standard
    complex Gaussian.  Draw order: sines, ranges, gains.
    """
    if num_paths < 1:
        raise ValueError("need at least one path")
    r_max = fraunhofer_distance(geometry)
    if not r_min < r_max:
        raise ValueError(f"r_min {r_min} must lie below the far-field boundary {r_max}")
    sines = rng.uniform(sin_range[0], sin_range[1], num_paths)
    ranges = rng.uniform(r_min, r_max, num_paths)
    gains = complex_gaussian(rng, num_paths, 1.0)
    points = tuple(PolarPoint(float(np.arcsin(s)), float(r)) for s, r in zip(sines, ranges))
    return PathSet(gains=gains, points=points)


def sample_grid_paths(
    rng: np.random.Generator,
    num_paths: int,
    grid: PolarGrid,
    sin_range: tuple[float, float] = DEFAULT_SIN_RANGE,
) -> PathSet:
    """Draw paths uniformly over the nodes of a polar grid.

    Angles are drawn uniformly from the grid angles whose sine lies in
    ``sin_range`` and ranges uniformly from the grid's distance rows, so
    every path coincides exactly with a dictionary atom.  This is the
    placement used by the NMSE experiments; :func:`sample_paths` is the
    gridless alternative.  Draw order: angle indices, distance indices,
    gains.
    """
    if num_paths < 1:
        raise ValueError("need at least one path")
    sines = np.sin(grid.angles)
    eligible = np.flatnonzero((sines >= sin_range[0]) & (sines <= sin_range[1]))
    if eligible.size == 0:
        raise ValueError(f"no grid angles inside sin range {sin_range}")
    angle_idx = eligible[rng.integers(0, eligible.size, num_paths)]
    dist_idx = rng.integers(0, grid.num_distances, num_paths)
    gains = complex_gaussian(rng, num_paths, 1.0)
    points = tuple(
        PolarPoint(float(grid.angles[tt]), float(grid.distances[tr, tt]))
        for tt, tr in zip(angle_idx, dist_idx)
    )
    return PathSet(gains=gains, points=points)


def synthesize_channel(geometry: ArrayGeometry, paths: PathSet) -> np.ndarray:
    """Antenna-domain channel vector for a path set.

    ``h = sqrt(MN / L) * sum_l gain_l * exp(-j 2 pi r_l / wavelength)
    * g(theta_l, r_l)`` with unit-norm responses ``g``, so that the
    expected squared norm of ``h`` equals the element count MN.
    """
    scale = np.sqrt(geometry.size / len(paths))
    wavenumber = 2.0 * np.pi / geometry.wavelength
    h = np.zeros(geometry.size, dtype=complex)
    for gain, point in zip(paths.gains, paths.points):
        phase = np.exp(-1j * wavenumber * point.r)
        h += gain * phase * _response(geometry, _sin(point.theta), point.r)
    return scale * h
