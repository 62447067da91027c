"""Near-field sparse channel estimation for subarray-based XL-MIMO.

The package simulates uplink training of an extremely large aperture
array split into phase-shifter subarrays, builds polar-domain (angle x
distance) dictionaries in which near-field channels are sparse, and
estimates channels from compressed analog measurements.  Estimators:
a zero-attracting LMS adaptive filter operating in the polar domain
(PD-ZALMS), greedy orthogonal matching pursuit over the polar or
per-subarray angular dictionaries (PD-OMP / MAD-OMP), and an oracle
least-squares fit on the true grid support.  A seeded Monte Carlo
harness reproduces NMSE-versus-SNR and NMSE-versus-pilot-length sweeps
and writes CSV for external plotting.
"""

from nfse.core import RankDeficiencyError, complex_gaussian, ls_solve, make_rng, random_unitary
from nfse.geometry import (
    ArrayGeometry,
    PolarPoint,
    array_response,
    build_geometry,
    element_distance,
    fraunhofer_distance,
)
from nfse.channel import PathSet, sample_grid_paths, sample_paths, synthesize_channel
from nfse.dictionary import (
    Dictionary,
    PolarGrid,
    build_angular_dictionary,
    build_polar_dictionary,
    build_polar_grid,
    nearest_grid_index,
)
from nfse.measurement import (
    MeasurementSet,
    PilotMatrix,
    SamplingMatrix,
    build_pilots,
    build_sampling_matrix,
    measure,
    post_process,
    simulate_uplink,
)
from nfse.estimators import (
    DivergenceError,
    EstimateResult,
    ZalmsConfig,
    attractor_gradient,
    mad_omp,
    omp,
    oracle_ls,
    pd_omp,
    pd_zalms,
)
from nfse.harness import (
    ExperimentConfig,
    SweepResult,
    UndefinedMetricError,
    nmse,
    run_trial,
    sweep_pilot_length,
    sweep_snr,
)

__version__ = "0.1.0"
