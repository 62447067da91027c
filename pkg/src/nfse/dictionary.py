"""Polar-domain and per-subarray angular dictionaries over angle/distance grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nfse.geometry import ArrayGeometry, PolarPoint, _response, _sin, fraunhofer_distance


def angle_sines(num_angles: int) -> np.ndarray:
    """Grid sines ``(2 (t - 1) - T) / T`` for ``t = 1 .. T``.

    Uniform in sine space with spacing ``2 / T``, starting at -1.
    """
    if num_angles < 2:
        raise ValueError(f"need at least two angle samples, got {num_angles}")
    t = np.arange(1, num_angles + 1)
    return (2.0 * (t - 1) - num_angles) / num_angles


@dataclass(frozen=True)
class PolarGrid:
    """Angle/distance sampling of the polar domain.

    ``angles`` holds the sampled angles in radians; ``distances`` is a
    ``(num_distances, num_angles)`` array of ranges in meters, so a node
    is the pair ``(angles[tt], distances[tr, tt])``.  In ``uniform``
    mode the rows are angle-independent arithmetic progressions; in
    ``beta`` mode each row scales with ``cos^2(theta) / t_r``.
    """

    angles: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    mode: str = "uniform"

    def __post_init__(self) -> None:
        if self.distances.ndim != 2 or self.distances.shape[1] != len(self.angles):
            raise ValueError("distance rows must be (num_distances, num_angles)")
        if not (self.distances > 0).all():
            raise ValueError("all grid distances must be positive")

    @property
    def num_angles(self) -> int:
        return len(self.angles)

    @property
    def num_distances(self) -> int:
        return self.distances.shape[0]

    @property
    def size(self) -> int:
        return self.num_angles * self.num_distances

    def column_index(self, angle_idx: int, dist_idx: int) -> int:
        """Dictionary column for grid node (angle_idx, dist_idx)."""
        return dist_idx * self.num_angles + angle_idx

    def node_of(self, column: int) -> tuple[int, int]:
        """Inverse of :meth:`column_index`."""
        return column % self.num_angles, column // self.num_angles


def build_polar_grid(
    geometry: ArrayGeometry,
    num_angles: int,
    mode: str = "uniform",
    *,
    r_step: float = 5.0,
    r_min: float = 5.0,
    r_max: float | None = None,
    beta: float = 1.2,
    num_distances: int | None = None,
    aperture: float | None = None,
) -> PolarGrid:
    """Build an angle/distance grid.

    ``uniform`` mode samples ranges ``r_min, r_min + r_step, ...`` up to
    ``r_max`` (default: the far-field boundary), the same for every
    angle.  ``beta`` mode samples ``aperture^2 cos^2(theta) /
    (2 beta^2 wavelength t)`` for ``t = 1 .. num_distances``, denser
    close to the array; ``aperture`` defaults to the full-array value
    and ``beta`` trades grid size against atom coherence.
    """
    sines = angle_sines(num_angles)
    angles = np.arcsin(sines)
    angles.flags.writeable = False
    if mode == "uniform":
        if r_max is None:
            r_max = fraunhofer_distance(geometry)
        if not (0 < r_min < r_max):
            raise ValueError(f"need 0 < r_min < r_max, got [{r_min}, {r_max}]")
        if r_step <= 0:
            raise ValueError(f"distance step must be positive, got {r_step}")
        count = int(np.floor((r_max - r_min) / r_step + 1e-9)) + 1
        ranges = r_min + r_step * np.arange(count)
        rows = np.broadcast_to(ranges[:, None], (count, num_angles)).copy()
    elif mode == "beta":
        if num_distances is None or num_distances < 1:
            raise ValueError("beta mode needs num_distances >= 1")
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        if aperture is None:
            aperture = geometry.aperture
        # cos(arcsin(-1)) is a subnormal-free tiny positive float, so the
        # endfire column keeps a (degenerate but) positive distance.
        cos2 = np.cos(angles) ** 2
        t = np.arange(1, num_distances + 1)[:, None]
        rows = aperture**2 * cos2[None, :] / (2.0 * beta**2 * geometry.wavelength * t)
    else:
        raise ValueError(f"unknown grid mode {mode!r}")
    rows.flags.writeable = False
    return PolarGrid(angles=angles, distances=rows, mode=mode)


@dataclass(frozen=True)
class Dictionary:
    """Matrix of unit-norm near-field atoms over a polar grid.

    Column ``dist_idx * num_angles + angle_idx`` is the array response
    at that grid node, i.e. columns are grouped into distance blocks,
    each block sweeping all angles.
    """

    atoms: np.ndarray = field(repr=False)
    grid: PolarGrid

    def __post_init__(self) -> None:
        if self.atoms.shape[1] != self.grid.size:
            raise ValueError("atom count does not match grid size")


def build_polar_dictionary(geometry: ArrayGeometry, grid: PolarGrid) -> Dictionary:
    """Evaluate the array response at every grid node.

    Columns are produced by the same code path as
    :func:`nfse.geometry.array_response`, so rebuilding a column from
    its node reproduces it exactly.
    """
    atoms = np.empty((geometry.size, grid.size), dtype=complex)
    for tr in range(grid.num_distances):
        for tt in range(grid.num_angles):
            col = grid.column_index(tt, tr)
            atoms[:, col] = _response(
                geometry, _sin(grid.angles[tt]), grid.distances[tr, tt]
            )
    atoms.flags.writeable = False
    return Dictionary(atoms=atoms, grid=grid)


def build_angular_dictionary(geometry: ArrayGeometry, num_angles: int) -> list[np.ndarray]:
    """Per-subarray far-field dictionaries, one ``(N, num_angles)`` block each.

    Block ``m`` holds planar-wavefront steering vectors over subarray
    ``m``'s own centered coordinates: entry ``(1 / sqrt(N)) *
    exp(+j (2 pi / wavelength) z_local sin(theta_t))``.  The angle grid
    is the shared sine rule.
    """
    sines = angle_sines(num_angles)
    n = geometry.antennas_per_subarray
    wavenumber = 2.0 * np.pi / geometry.wavelength
    blocks = []
    for m in range(geometry.num_subarrays):
        z = geometry.antenna_coords[geometry.subarray_slice(m)]
        z_local = z - (z.max() + z.min()) / 2.0
        block = np.exp(1j * wavenumber * np.outer(z_local, sines)) / np.sqrt(n)
        block.flags.writeable = False
        blocks.append(block)
    return blocks


def nearest_grid_index(grid: PolarGrid, point: PolarPoint) -> int:
    """Dictionary column of the grid node closest to ``point``.

    Lexicographic match: nearest sampled sine first, then nearest range
    within that angle's distance row; ties resolve to the smaller index.
    Angle mismatch dominates atom correlation, which makes this the
    right order for reconstructing an oracle support.
    """
    sines = np.sin(grid.angles)
    angle_idx = int(np.argmin(np.abs(sines - _sin(point.theta))))
    dist_idx = int(np.argmin(np.abs(grid.distances[:, angle_idx] - point.r)))
    return grid.column_index(angle_idx, dist_idx)
