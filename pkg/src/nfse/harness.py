"""Seeded Monte Carlo NMSE experiments: paired trials, sweeps, CSV output.

Every trial derives its own seed from (base seed, sweep point, trial
index), draws one channel / sampling matrix / noise realization, and
runs every requested estimator on that identical measurement, so
per-trial algorithm comparisons are paired.  Sweeps run trials in a
process pool (capped by the ``NFSE_THREADS`` environment variable) with
worker BLAS pinned to one thread, which keeps sweep CSVs byte-identical
for any pool size.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import multiprocessing
import numpy as np

from nfse.channel import PathSet, sample_grid_paths, sample_paths, synthesize_channel
from nfse.core import RankDeficiencyError, make_rng
from nfse.dictionary import (
    Dictionary,
    build_angular_dictionary,
    build_polar_dictionary,
    build_polar_grid,
)
from nfse.estimators import (
    DivergenceError,
    ZalmsConfig,
    mad_omp,
    oracle_ls,
    pd_omp,
    pd_zalms,
)
from nfse.geometry import ArrayGeometry, build_geometry
from nfse.measurement import build_sampling_matrix, measure

ALGORITHMS = ("mad-omp", "oracle-ls", "pd-omp", "pd-zalms")

CSV_HEADER = "sweep_param,sweep_value,algorithm,nmse_linear,nmse_db,trials,stderr_db,failed_trials"


class UndefinedMetricError(ValueError):
    """NMSE is undefined for a zero reference channel."""


def nmse(h: np.ndarray, h_hat: np.ndarray) -> float:
    """Normalized squared error ``||h - h_hat||^2 / ||h||^2`` (linear)."""
    ref = float(np.linalg.norm(h) ** 2)
    if ref == 0.0:
        raise UndefinedMetricError("reference channel has zero norm")
    if len(h) != len(h_hat):
        raise ValueError(f"length mismatch: {len(h)} vs {len(h_hat)}")
    return float(np.linalg.norm(h - h_hat) ** 2) / ref


# Published step sizes for this setup are referenced to steering entries
# of unit magnitude; with unit-norm atoms the same trajectory needs the
# gradient step scaled by the element count MN = 256.
TABLE_STEP_SIZE = 6e-5 * 256
TABLE_ATTRACTOR_STEP = 5e-5
TABLE_SHARPNESS = 25.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one NMSE experiment (geometry to sweep grid)."""

    # geometry
    num_subarrays: int = 8
    antennas_per_subarray: int = 32
    wavelength: float = 3e-3
    antenna_spacing: float = 1.5e-3
    subarray_spacing: float = 72e-3
    # channel
    num_paths: int = 4
    r_min: float = 5.0
    sin_theta_min: float = -0.75
    sin_theta_max: float = 0.75
    path_placement: str = "grid"  # "grid" (on dictionary nodes) or "continuous"
    # dictionary grid; the default beta-rule rings sample ranges as
    # R_FD cos^2(theta) / t for t = 1..44, spanning 5 m .. R_FD with a
    # 5 m innermost spacing for the reference geometry
    grid_mode: str = "beta"
    grid_num_angles: int = 32
    grid_r_step: float = 5.0
    grid_r_min: float = 5.0
    grid_r_max: float | None = None  # None: far-field boundary (uniform mode)
    grid_beta: float = 0.5
    grid_num_distances: int | None = 44
    # training
    pilot_length: int = 15
    # estimators
    algorithms: tuple[str, ...] = ALGORITHMS
    sparsity: int = 4
    zalms: ZalmsConfig = field(
        default_factory=lambda: ZalmsConfig(
            step_size=TABLE_STEP_SIZE,
            attractor_step=TABLE_ATTRACTOR_STEP,
            sharpness=TABLE_SHARPNESS,
            # At production sizes the iterate-change floor sits above any
            # tight tolerance, so the iteration budget is the effective
            # stopping rule; single precision halves its wall time.
            max_iters=16384,
            rel_tolerance=1e-3,
            single_precision=True,
        )
    )
    # sweeps
    snr_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
    pilot_lengths: tuple[int, ...] = (6, 9, 12, 15, 18, 21, 24, 27, 30)
    pilot_snr_db: float = 15.0
    trials: int = 2000
    base_seed: int = 1

    def validate(self) -> None:
        n = self.antennas_per_subarray
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("snr_db sweep list must not be empty")
        if not self.pilot_lengths:
            raise ValueError("pilot_lengths sweep list must not be empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(
                f"unknown algorithms {sorted(unknown)}; choose from {list(ALGORITHMS)}"
            )
        if not self.algorithms:
            raise ValueError("algorithm list must not be empty")
        if not 1 <= self.pilot_length <= n:
            raise ValueError(
                f"pilot length {self.pilot_length} must lie in [1, {n}] "
                "(the per-subarray antenna count)"
            )
        bad_q = [q for q in self.pilot_lengths if not 1 <= q <= n]
        if bad_q:
            raise ValueError(
                f"pilot lengths {bad_q} must lie in [1, {n}] "
                "(the per-subarray antenna count)"
            )
        if self.path_placement not in ("grid", "continuous"):
            raise ValueError(
                f"path_placement must be 'grid' or 'continuous', got {self.path_placement!r}"
            )
        if self.grid_mode not in ("uniform", "beta"):
            raise ValueError(f"grid_mode must be 'uniform' or 'beta', got {self.grid_mode!r}")
        if not -1.0 <= self.sin_theta_min < self.sin_theta_max <= 1.0:
            raise ValueError("sin-theta range must be an interval inside [-1, 1]")
        if self.sparsity < 1:
            raise ValueError("sparsity must be >= 1")
        # geometry and grid constructors run their own checks
        context_for(self)


@dataclass(frozen=True)
class ExperimentContext:
    """Deterministic per-config state shared by all trials."""

    geometry: ArrayGeometry
    dictionary: Dictionary
    angular_blocks: list[np.ndarray]


def context_for(cfg: ExperimentConfig) -> ExperimentContext:
    geometry = build_geometry(
        cfg.num_subarrays,
        cfg.antennas_per_subarray,
        cfg.antenna_spacing,
        cfg.subarray_spacing,
        cfg.wavelength,
    )
    grid = build_polar_grid(
        geometry,
        cfg.grid_num_angles,
        cfg.grid_mode,
        r_step=cfg.grid_r_step,
        r_min=cfg.grid_r_min,
        r_max=cfg.grid_r_max,
        beta=cfg.grid_beta,
        num_distances=cfg.grid_num_distances,
    )
    dictionary = build_polar_dictionary(geometry, grid)
    angular = build_angular_dictionary(geometry, cfg.grid_num_angles)
    return ExperimentContext(geometry=geometry, dictionary=dictionary, angular_blocks=angular)


def derive_trial_seed(base_seed: int, snr_db: float, pilot_length: int, trial_index: int) -> int:
    """Stable 64-bit seed for one trial, independent of execution order."""
    key = f"{base_seed}|{float(snr_db)!r}|{pilot_length}|{trial_index}"
    digest = hashlib.sha256(key.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def run_trial(
    cfg: ExperimentConfig,
    snr_db: float,
    pilot_length: int,
    trial_index: int,
    paths: PathSet | None = None,
    context: ExperimentContext | None = None,
) -> dict[str, float | None]:
    """One paired trial: one realization, every requested estimator.

    Draw order from the derived seed: paths, sampling matrix, noise.
    ``paths`` overrides the path draw for controlled experiments (the
    same number of random draws is still consumed, keeping the rest of
    the realization identical).  Estimator failures (rank deficiency,
    divergence) are recorded as ``None`` rather than raised.
    """
    if context is None:
        context = context_for(cfg)
    rng = make_rng(derive_trial_seed(cfg.base_seed, snr_db, pilot_length, trial_index))
    sin_range = (cfg.sin_theta_min, cfg.sin_theta_max)
    if cfg.path_placement == "grid":
        drawn = sample_grid_paths(rng, cfg.num_paths, context.dictionary.grid, sin_range)
    else:
        drawn = sample_paths(rng, cfg.num_paths, context.geometry, cfg.r_min, sin_range)
    if paths is None:
        paths = drawn
    h = synthesize_channel(context.geometry, paths)
    sampling = build_sampling_matrix(rng, context.geometry, pilot_length)
    snr = 10.0 ** (snr_db / 10.0) if math.isfinite(snr_db) else math.inf
    measurement = measure(rng, h, sampling, context.dictionary, snr)

    out: dict[str, float | None] = {}
    for name in sorted(cfg.algorithms):
        try:
            if name == "pd-zalms":
                result = pd_zalms(measurement, cfg.zalms)
            elif name == "pd-omp":
                result = pd_omp(measurement, cfg.sparsity)
            elif name == "mad-omp":
                result = mad_omp(measurement, context.angular_blocks, cfg.sparsity)
            elif name == "oracle-ls":
                result = oracle_ls(measurement, paths)
            else:  # pragma: no cover - validate() rejects unknown names
                raise ValueError(f"unknown algorithm {name!r}")
            out[name] = nmse(h, result.h_hat)
        except (RankDeficiencyError, DivergenceError, ValueError):
            out[name] = None
    return out


@dataclass(frozen=True)
class SweepRow:
    sweep_param: str
    sweep_value: float
    algorithm: str
    nmse_linear: float
    nmse_db: float
    trials: int
    stderr_db: float
    failed_trials: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.sweep_param},{_fmt(r.sweep_value)},{r.algorithm},"
                f"{_fmt(r.nmse_linear)},{_fmt(r.nmse_db)},{r.trials},"
                f"{_fmt(r.stderr_db)},{r.failed_trials}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())

    def value_of(self, sweep_value: float, algorithm: str) -> SweepRow:
        for r in self.rows:
            if r.sweep_value == sweep_value and r.algorithm == algorithm:
                return r
        raise KeyError(f"no row for ({sweep_value}, {algorithm})")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


# --- worker pool -----------------------------------------------------------

_WORKER: dict = {}


def _init_worker(cfg: ExperimentConfig) -> None:
    from threadpoolctl import threadpool_limits

    # One BLAS thread per worker: trial numerics never depend on how many
    # workers share the machine, so pool size cannot change results.
    _WORKER["limits"] = threadpool_limits(limits=1)
    _WORKER["cfg"] = cfg
    _WORKER["context"] = context_for(cfg)


def _run_task(task: tuple[float, int, int]) -> dict[str, float | None]:
    snr_db, pilot_length, trial_index = task
    return run_trial(
        _WORKER["cfg"], snr_db, pilot_length, trial_index, context=_WORKER["context"]
    )


def _worker_count() -> int:
    env = os.environ.get("NFSE_THREADS", "").strip()
    if env:
        count = int(env)
        if count < 1:
            raise ValueError(f"NFSE_THREADS must be >= 1, got {count}")
        return count
    return os.cpu_count() or 1


def aggregate_point(
    sweep_param: str,
    sweep_value: float,
    algorithm: str,
    per_trial: list[float | None],
) -> SweepRow:
    """Fold one (sweep point, algorithm) trial list into a result row.

    Failed trials (None) are excluded from the mean and reported in
    ``failed_trials``; the standard error is mapped to dB by the delta
    method.
    """
    values = np.array([v for v in per_trial if v is not None])
    failed = len(per_trial) - len(values)
    if len(values) == 0:
        mean = math.nan
        err_db = math.nan
    else:
        mean = float(values.mean())
        if len(values) > 1 and mean > 0:
            se = float(values.std(ddof=1)) / math.sqrt(len(values))
            err_db = 10.0 / math.log(10.0) * se / mean
        else:
            err_db = math.nan
    return SweepRow(
        sweep_param=sweep_param,
        sweep_value=sweep_value,
        algorithm=algorithm,
        nmse_linear=mean,
        nmse_db=10.0 * math.log10(mean) if mean > 0 else -math.inf,
        trials=len(values),
        stderr_db=err_db,
        failed_trials=failed,
    )


def _run_sweep(cfg: ExperimentConfig, sweep_param: str, points: list[tuple[float, int]]) -> SweepResult:
    """Run trials for every (snr_db, Q) point and aggregate, in fixed order."""
    cfg.validate()
    tasks = [
        (snr_db, q, t)
        for snr_db, q in points
        for t in range(cfg.trials)
    ]
    workers = min(_worker_count(), len(tasks))
    chunk = max(1, min(32, len(tasks) // (4 * workers) or 1))
    with ProcessPoolExecutor(
        max_workers=workers,
        mp_context=multiprocessing.get_context("spawn"),
        initializer=_init_worker,
        initargs=(cfg,),
    ) as pool:
        results = list(pool.map(_run_task, tasks, chunksize=chunk))

    rows = []
    for i, (snr_db, q) in enumerate(points):
        per_point = results[i * cfg.trials : (i + 1) * cfg.trials]
        sweep_value = float(snr_db) if sweep_param == "snr" else float(q)
        for algorithm in sorted(cfg.algorithms):
            rows.append(
                aggregate_point(
                    sweep_param,
                    sweep_value,
                    algorithm,
                    [r[algorithm] for r in per_point],
                )
            )
    return SweepResult(rows=tuple(rows))


def sweep_snr(cfg: ExperimentConfig) -> SweepResult:
    """Mean NMSE per algorithm at every SNR in ``cfg.snr_db`` (fixed Q)."""
    points = [(float(s), cfg.pilot_length) for s in sorted(cfg.snr_db)]
    return _run_sweep(cfg, "snr", points)


def sweep_pilot_length(cfg: ExperimentConfig) -> SweepResult:
    """Mean NMSE per algorithm at every pilot length (fixed SNR)."""
    points = [(float(cfg.pilot_snr_db), int(q)) for q in sorted(cfg.pilot_lengths)]
    return _run_sweep(cfg, "pilot", points)
