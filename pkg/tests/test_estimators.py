import tracemalloc

import numpy as np
import pytest

from nfse.channel import PathSet, synthesize_channel
from nfse.core import RankDeficiencyError, ls_solve, make_rng, random_unitary
from nfse.dictionary import build_polar_dictionary, build_polar_grid
from nfse.estimators import (
    DivergenceError,
    ZalmsConfig,
    attractor_gradient,
    mad_omp,
    omp,
    oracle_ls,
    pd_omp,
    pd_zalms,
)
from nfse.geometry import PolarPoint, build_geometry
from nfse.measurement import build_sampling_matrix, measure
from nfse.dictionary import build_angular_dictionary

ALPHA = 25.0


def tiny_setup(seed=11, snr=np.inf, num_angles=3):
    """Single-subarray 8-antenna rig with a 3-atom dictionary (full rank)."""
    geometry = build_geometry(1, 8, 0.0015, 0.012, 0.003)
    grid = build_polar_grid(geometry, num_angles, "uniform", r_min=5.0, r_max=6.0)
    dictionary = build_polar_dictionary(geometry, grid)
    rng = make_rng(seed)
    paths = PathSet(gains=np.array([1.0 + 0.3j]), points=(PolarPoint(0.21, 5.5),))
    h = synthesize_channel(geometry, paths)
    sampling = build_sampling_matrix(rng, geometry, 8)
    return measure(rng, h, sampling, dictionary, snr), h


@pytest.fixture(scope="module")
def table_measurement(geometry, dictionary):
    """Reference-size measurement with four on-grid paths at 20 dB."""
    rng = make_rng(2025)
    grid = dictionary.grid
    nodes = [(6, 2), (13, 20), (21, 8), (27, 40)]
    points = tuple(
        PolarPoint(float(grid.angles[tt]), float(grid.distances[tr, tt])) for tt, tr in nodes
    )
    gains = np.array([1.1 - 0.2j, -0.6 + 0.9j, 0.4 + 0.4j, -0.8 - 0.3j])
    paths = PathSet(gains=gains, points=points)
    h = synthesize_channel(geometry, paths)
    sampling = build_sampling_matrix(rng, geometry, 15)
    return measure(rng, h, sampling, dictionary, 100.0), h, paths


class TestAttractorGradient:
    def test_zero_stays_zero(self):
        out = attractor_gradient(np.zeros(5, dtype=complex), ALPHA)
        assert np.array_equal(out, np.zeros(5, dtype=complex))

    def test_scalar_value(self):
        out = attractor_gradient(np.array([0.1 + 0j]), ALPHA)
        assert out[0] == pytest.approx(25.0 * np.exp(-2.5), rel=1e-12)

    def test_bounded_by_sharpness(self, rng):
        eta = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        assert np.abs(attractor_gradient(eta, ALPHA)).max() <= ALPHA

    def test_matches_finite_differences_of_penalty(self):
        # Smooth surrogate f(x) = sum(1 - exp(-a |x_i|)) on real vectors.
        def f(x):
            return np.sum(1.0 - np.exp(-ALPHA * np.abs(x)))

        rng = make_rng(31)
        step = 1e-6
        for _ in range(100):
            x = rng.uniform(0.01, 1.0, 6) * rng.choice([-1.0, 1.0], 6)
            grad = attractor_gradient(x.astype(complex), ALPHA).real
            for i in range(len(x)):
                e = np.zeros_like(x)
                e[i] = step
                fd = (f(x + e) - f(x - e)) / (2 * step)
                assert abs(grad[i] - fd) < 1e-6

    def test_pure_attractor_step_shrinks_without_crossing(self):
        delta = 0.005
        # Scalars where the pull both contracts and stays above one ulp.
        for eta in [0.05, 0.1, 0.5, -0.2, -0.07, 0.9]:
            pull = delta * ALPHA * np.exp(-ALPHA * abs(eta))
            assert pull < abs(eta)  # sampled inside the contraction region
            stepped = eta - delta * attractor_gradient(np.array([eta + 0j]), ALPHA)[0].real
            assert abs(stepped) < abs(eta)
            assert np.sign(stepped) == np.sign(eta)


class TestOmp:
    def test_identity_dictionary_picks_peak(self):
        support, coeffs, _ = omp(np.array([0.0, 3.0, 0.0]), np.eye(3), 1)
        assert support == [1]
        assert coeffs == pytest.approx([3.0])

    def test_exact_recovery_on_incoherent_dictionary(self):
        # Union of two orthonormal bases: coherence 1/sqrt(20) < 1/3, so
        # any 2-sparse signal is recovered exactly.
        n = 20
        fourier = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        a = np.hstack([np.eye(n, dtype=complex), fourier])
        x0 = np.zeros(2 * n, dtype=complex)
        x0[3] = 1.0
        x0[27] = 0.8j
        support, coeffs, _ = omp(a @ x0, a, 2)
        assert sorted(support) == [3, 27]
        lifted = np.zeros(2 * n, dtype=complex)
        lifted[support] = coeffs
        assert np.allclose(lifted, x0, atol=1e-10)

    def test_square_invertible_reaches_zero_residual(self):
        a = random_unitary(make_rng(6), 6)
        y = np.arange(1, 7).astype(complex)
        support, coeffs, residuals = omp(y, a, 6)
        assert len(set(support)) == len(support)
        assert residuals[-1] < 1e-10

    def test_zero_observation_short_circuits(self):
        support, coeffs, residuals = omp(np.zeros(4, complex), np.eye(4, dtype=complex), 2)
        assert support == [] and len(coeffs) == 0 and residuals == []

    def test_never_reselects_and_support_size_is_sparsity(self, rng):
        a = (rng.standard_normal((30, 60)) + 1j * rng.standard_normal((30, 60)))
        y = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        support, _, _ = omp(y, a, 8)
        assert len(support) == 8
        assert len(set(support)) == 8

    def test_rank_deficient_selection_raises(self):
        # Dictionary {a, b, (a+b)/|a+b|} plus an off-span observation
        # component forces a third pick that is linearly dependent.
        a = np.array([1.0, 0, 0, 0], dtype=complex)
        b = np.array([0, 1.0, 0, 0], dtype=complex)
        c = (a + b) / np.linalg.norm(a + b)
        d = np.array([0, 0, 1.0, 0], dtype=complex)  # not in the dictionary
        cols = np.stack([a, b, c], axis=1)
        y = 2 * a + b + 0.1 * d
        with pytest.raises(RankDeficiencyError):
            omp(y, cols, 3)

    def test_sparsity_validation(self):
        with pytest.raises(ValueError):
            omp(np.ones(3, complex), np.eye(3, dtype=complex), 0)
        with pytest.raises(ValueError):
            omp(np.ones(3, complex), np.eye(3, dtype=complex), 4)


class TestPdZalms:
    def test_single_iteration_is_gradient_step(self):
        m, _ = tiny_setup(snr=50.0)
        cfg = ZalmsConfig(step_size=0.1, attractor_step=5e-5, max_iters=1)
        res = pd_zalms(m, cfg)
        expected = 0.1 * (m.psi.conj().T @ m.y_tilde)
        assert np.allclose(res.eta_hat, expected, rtol=1e-12, atol=1e-15)
        assert res.iterations_run == 1
        assert len(res.residual_history) == 1
        assert res.residual_history[0] == pytest.approx(np.linalg.norm(m.y_tilde))

    def test_reduces_to_ls_solution_without_attractor(self):
        m, _ = tiny_setup(snr=np.inf)
        target = ls_solve(m.psi, m.y_tilde)
        cfg = ZalmsConfig(step_size=0.2, attractor_step=0.0, max_iters=60_000,
                          rel_tolerance=1e-13)
        res = pd_zalms(m, cfg)
        err = np.linalg.norm(res.eta_hat - target) / np.linalg.norm(target)
        assert err < 1e-6

    def test_zero_observation_is_fixed_point(self, dictionary, geometry):
        rng = make_rng(4)
        sampling = build_sampling_matrix(rng, geometry, 15)
        h = np.zeros(geometry.size, dtype=complex)
        m = measure(rng, h, sampling, dictionary, np.inf)
        cfg = ZalmsConfig(step_size=0.01, attractor_step=5e-5, max_iters=50)
        res = pd_zalms(m, cfg)
        assert np.array_equal(res.eta_hat, np.zeros(dictionary.grid.size, complex))

    def test_divergence_raises_and_names_step_size(self):
        m, _ = tiny_setup(snr=np.inf)
        cfg = ZalmsConfig(step_size=500.0, max_iters=5000, rel_tolerance=0.0)
        with pytest.raises(DivergenceError, match="step size"):
            pd_zalms(m, cfg)

    def test_delta_zero_is_bitwise_plain_lms(self):
        m, _ = tiny_setup(snr=30.0)
        mu = 0.05
        iters = 9
        cfg = ZalmsConfig(step_size=mu, attractor_step=0.0, max_iters=iters,
                          rel_tolerance=0.0)
        res = pd_zalms(m, cfg)
        psi = np.ascontiguousarray(m.psi, dtype=np.complex128)
        y = np.ascontiguousarray(m.y_tilde, dtype=np.complex128)
        eta = np.zeros(psi.shape[1], dtype=np.complex128)
        err = np.empty(psi.shape[0], dtype=np.complex128)
        grad = np.empty(psi.shape[1], dtype=np.complex128)
        step = np.float64(mu)
        for _ in range(iters):
            np.matmul(psi, eta, out=err)
            np.subtract(y, err, out=err)
            np.conjugate(err, out=err)
            np.matmul(err, psi, out=grad)
            np.conjugate(grad, out=grad)
            eta = eta + step * grad
        assert np.array_equal(res.eta_hat, eta)

    def test_estimate_ties_to_dictionary(self, table_measurement):
        m, h, _ = table_measurement
        cfg = ZalmsConfig(step_size=0.0154, attractor_step=5e-5, max_iters=300)
        res = pd_zalms(m, cfg)
        assert np.allclose(res.h_hat, m.dictionary.atoms @ res.eta_hat, atol=1e-10)
        assert len(res.residual_history) == res.iterations_run

    def test_single_precision_tracks_double(self, table_measurement):
        # Rounding noise accumulates along the iteration, so compare the
        # reconstruction quality both precisions reach, not the iterates.
        m, h, _ = table_measurement
        kw = dict(step_size=0.0154, attractor_step=5e-5, max_iters=400)
        res64 = pd_zalms(m, ZalmsConfig(**kw, single_precision=True))
        res128 = pd_zalms(m, ZalmsConfig(**kw))
        href = np.linalg.norm(h) ** 2
        err64 = np.linalg.norm(h - res64.h_hat) ** 2 / href
        err128 = np.linalg.norm(h - res128.h_hat) ** 2 / href
        assert err64 == pytest.approx(err128, rel=0.05)

    def test_no_quadratic_allocation_in_grid_size(self, table_measurement):
        # The iteration must stay matrix-vector shaped: nothing close to
        # a (grid size)^2 buffer may appear while it runs.
        m, _, _ = table_measurement
        cfg = ZalmsConfig(step_size=0.0154, attractor_step=5e-5, max_iters=40)
        grid_size = m.dictionary.grid.size
        quadratic_bytes = grid_size * grid_size * 16
        tracemalloc.start()
        tracemalloc.reset_peak()
        pd_zalms(m, cfg)
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert peak < quadratic_bytes / 3
        assert peak < 12 * 1024 * 1024


class TestPdOmp:
    def test_exact_recovery_of_on_grid_path(self, geometry, dictionary):
        grid = dictionary.grid
        tt, tr = 20, 7
        point = PolarPoint(float(grid.angles[tt]), float(grid.distances[tr, tt]))
        paths = PathSet(gains=np.array([1.0 + 0j]), points=(point,))
        h = synthesize_channel(geometry, paths)
        rng = make_rng(55)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, h, sampling, dictionary, np.inf)
        res = pd_omp(m, 1)
        err = np.linalg.norm(h - res.h_hat) ** 2 / np.linalg.norm(h) ** 2
        assert err < 1e-20
        assert np.flatnonzero(res.eta_hat) == [grid.column_index(tt, tr)]

    def test_zero_observation_gives_zero_estimate(self, geometry, dictionary):
        rng = make_rng(5)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, np.zeros(geometry.size, complex), sampling, dictionary, np.inf)
        res = pd_omp(m, 4)
        assert np.array_equal(res.h_hat, np.zeros(geometry.size, complex))
        assert res.iterations_run == 0


class TestMadOmp:
    def test_far_field_on_grid_recovery_per_subarray(self, geometry, dictionary):
        from nfse.dictionary import angle_sines

        sines = angle_sines(32)
        t = 22
        point = PolarPoint(float(np.arcsin(sines[t])), 1e6)
        paths = PathSet(gains=np.array([1.0 + 0j]), points=(point,))
        h = synthesize_channel(geometry, paths)
        rng = make_rng(66)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, h, sampling, dictionary, np.inf)
        blocks = build_angular_dictionary(geometry, 32)
        res = mad_omp(m, blocks, 1)
        n = geometry.antennas_per_subarray
        for i in range(geometry.num_subarrays):
            seg = slice(i * n, (i + 1) * n)
            err = np.linalg.norm(h[seg] - res.h_hat[seg]) ** 2 / np.linalg.norm(h[seg]) ** 2
            assert err < 1e-6

    def test_close_range_worse_than_polar_omp(self, geometry, dictionary):
        # Strong wavefront curvature at 5 m breaks the per-subarray planar
        # model while the polar dictionary matches it exactly.
        grid = dictionary.grid
        blocks = build_angular_dictionary(geometry, 32)
        mad_total, pd_total = 0.0, 0.0
        for trial in range(6):
            rng = make_rng(900 + trial)
            angle_idx = rng.choice(np.arange(4, 28), 4, replace=False)
            points = tuple(
                PolarPoint(float(grid.angles[tt]), float(grid.distances[0, tt]))
                for tt in angle_idx
            )
            gains = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
            paths = PathSet(gains=gains, points=points)
            h = synthesize_channel(geometry, paths)
            sampling = build_sampling_matrix(rng, geometry, 15)
            m = measure(rng, h, sampling, dictionary, 10 ** 1.5)
            href = np.linalg.norm(h) ** 2
            mad_total += np.linalg.norm(h - mad_omp(m, blocks, 4).h_hat) ** 2 / href
            pd_total += np.linalg.norm(h - pd_omp(m, 4).h_hat) ** 2 / href
        assert pd_total < mad_total

    def test_zero_observation_gives_zero_estimate(self, geometry, dictionary):
        rng = make_rng(5)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, np.zeros(geometry.size, complex), sampling, dictionary, np.inf)
        blocks = build_angular_dictionary(geometry, 32)
        res = mad_omp(m, blocks, 4)
        assert np.array_equal(res.h_hat, np.zeros(geometry.size, complex))


class TestOracleLs:
    def test_exact_on_distinct_grid_nodes(self, geometry, dictionary):
        grid = dictionary.grid
        nodes = [(5, 1), (12, 9), (19, 30), (28, 43)]
        points = tuple(
            PolarPoint(float(grid.angles[tt]), float(grid.distances[tr, tt]))
            for tt, tr in nodes
        )
        paths = PathSet(gains=np.array([1.0, -0.5j, 0.3 + 0.2j, 0.9]), points=points)
        h = synthesize_channel(geometry, paths)
        rng = make_rng(77)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, h, sampling, dictionary, np.inf)
        res = oracle_ls(m, paths)
        err = np.linalg.norm(h - res.h_hat) ** 2 / np.linalg.norm(h) ** 2
        assert err < 1e-20

    def test_coincident_paths_deduplicate(self, geometry, dictionary):
        grid = dictionary.grid
        shared = PolarPoint(float(grid.angles[10]), float(grid.distances[4, 10]))
        other = PolarPoint(float(grid.angles[22]), float(grid.distances[15, 22]))
        paths = PathSet(
            gains=np.array([1.0, 0.5, -0.7j]), points=(shared, shared, other)
        )
        h = synthesize_channel(geometry, paths)
        rng = make_rng(78)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, h, sampling, dictionary, np.inf)
        res = oracle_ls(m, paths)
        assert np.count_nonzero(res.eta_hat) == 2
        err = np.linalg.norm(h - res.h_hat) ** 2 / np.linalg.norm(h) ** 2
        assert err < 1e-20

    def test_estimates_tie_to_dictionary_recomputation(self, table_measurement):
        # Every polar-domain estimator must satisfy h_hat = G @ eta_hat;
        # MAD-OMP is the documented exception (angular-block assembly).
        m, _, paths = table_measurement
        for res in (pd_omp(m, 4), oracle_ls(m, paths)):
            recomputed = m.dictionary.atoms @ res.eta_hat
            assert np.allclose(res.h_hat, recomputed, atol=1e-10)

    def test_noise_dominated_regime_can_exceed_unity(self, table_measurement, geometry, dictionary):
        _, h, paths = table_measurement
        rng = make_rng(79)
        sampling = build_sampling_matrix(rng, geometry, 15)
        m = measure(rng, h, sampling, dictionary, 1e-6)
        res = oracle_ls(m, paths)
        err = np.linalg.norm(h - res.h_hat) ** 2 / np.linalg.norm(h) ** 2
        assert err > 1.0
