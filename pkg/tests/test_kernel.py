import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

import kianc
from kianc import kernel
from kianc.kernel import _j0_complex

from conftest import random_unit_vector


@pytest.fixture(scope="module")
def eta_x():
    return np.array([1.0, 0.0, 0.0])


class TestKappa:
    def test_coincident_uniform(self, k200, eta_x):
        assert kianc.kappa((0.1, 0.2, 0.0), (0.1, 0.2, 0.0), k200, 0.0, eta_x) == 1.0

    def test_uniform_first_zero(self, k200, eta_x):
        # one half wavelength separation: j0(pi) = 0
        r2 = np.array([np.pi / k200.k, 0.0, 0.0])
        val = kianc.kappa(np.zeros(3), r2, k200, 0.0, eta_x)
        assert abs(val) < 1e-15

    def test_coincident_directional(self, k200, eta_x):
        val = kianc.kappa(np.zeros(3), np.zeros(3), k200, 10.0, eta_x)
        assert np.isclose(val.real, math.sinh(10.0) / 10.0, rtol=1e-12)
        assert val.imag == 0.0

    def test_uniform_matches_scipy_bessel(self, k200, eta_x):
        rng = np.random.default_rng(0)
        for _ in range(20):
            r1, r2 = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
            val = kianc.kappa(r1, r2, k200, 0.0, eta_x)
            expected = scipy.special.spherical_jn(0, k200.k * np.linalg.norm(r2 - r1))
            assert np.isclose(val.real, expected, atol=1e-13)
            assert val.imag == 0.0

    def test_uniform_rotation_invariance(self, k200, eta_x):
        rng = np.random.default_rng(1)
        r12 = rng.uniform(-0.5, 0.5, 3)
        base = kianc.kappa(np.zeros(3), r12, k200, 0.0, eta_x)
        for _ in range(5):
            q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
            rotated = kianc.kappa(np.zeros(3), q @ r12, k200, 0.0, eta_x)
            assert np.isclose(rotated.real, base.real, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 12.0))
    def test_conjugate_symmetry(self, k200, seed, beta):
        rng = np.random.default_rng(seed)
        r1, r2 = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        eta = random_unit_vector(rng)
        ab = kianc.kappa(r1, r2, k200, beta, eta)
        ba = kianc.kappa(r2, r1, k200, beta, eta)
        assert ab == np.conj(ba)

    def test_branch_invariance(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        np.testing.assert_array_equal(_j0_complex(z), _j0_complex(-z))

    def test_series_matches_direct_at_cutoff(self):
        # continuity across the small-argument switch
        for z in (1e-4 + 0j, 1e-4 * 1j, (7e-5 + 7e-5j)):
            series = _j0_complex(np.array([z * 0.999]))[0]
            direct = np.sin(z * 1.001) / (z * 1.001)
            assert np.isclose(series, direct, rtol=1e-6)


class TestSphereOracle:
    def test_uniform_coincident(self, k200, eta_x):
        val = kianc.kappa_sphere_oracle(
            np.zeros(3), np.zeros(3), k200, 0.0, eta_x, n_samples=10_000, seed=0
        )
        assert np.isclose(val, 1.0, atol=3 / np.sqrt(10_000))

    def test_uniform_zero_crossing(self, k200, eta_x):
        r2 = np.array([np.pi / k200.k, 0.0, 0.0])
        val = kianc.kappa_sphere_oracle(
            np.zeros(3), r2, k200, 0.0, eta_x, n_samples=100_000, seed=1
        )
        assert abs(val) < 0.02

    def test_directional_agreement(self, k200):
        rng = np.random.default_rng(3)
        for _ in range(4):
            eta = random_unit_vector(rng)
            r1 = rng.uniform(-0.5, 0.5, 3)
            r2 = r1 + rng.uniform(-0.8, 0.8, 3)
            closed = kianc.kappa(r1, r2, k200, 2.0, eta)
            mc = kianc.kappa_sphere_oracle(r1, r2, k200, 2.0, eta, n_samples=400_000, seed=4)
            assert abs(closed - mc) / abs(closed) < 0.03


class TestGram:
    def test_single_mic_directional(self, k200, eta_x):
        g = kianc.gram(np.array([[0.2, 0.1, 0.0]]), k200, kianc.KernelParams(3.0, eta_x))
        expected = math.sinh(3.0) / 3.0
        assert g.entries.shape == (1, 1)
        assert np.isclose(g.entries[0, 0].real, expected, rtol=1e-12)

    def test_uniform_unit_diagonal(self, paper_scenario, k200, eta_x):
        g = kianc.gram(paper_scenario.error_mics, k200, kianc.KernelParams(0.0, eta_x))
        np.testing.assert_allclose(np.diag(g.entries), np.ones(48))
        np.testing.assert_allclose(g.entries.imag, 0.0, atol=1e-15)

    def test_paper_gram_hermitian(self, paper_scenario, k200):
        eta = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        g = kianc.gram(paper_scenario.error_mics, k200, kianc.KernelParams(10.0, eta))
        assert g.entries.shape == (48, 48)
        herm_err = np.linalg.norm(g.entries - g.entries.conj().T)
        assert herm_err <= 1e-10 * np.linalg.norm(g.entries)

    def test_params_validation(self, eta_x):
        with pytest.raises(ValueError):
            kianc.KernelParams(-1.0, eta_x)
        with pytest.raises(ValueError):
            kianc.KernelParams(1.0, np.array([1.0, 1.0, 0.0]))
        with pytest.raises(ValueError):
            kianc.KernelParams(1.0, eta_x, lam=0.0)


class TestInterpFilter:
    def test_reproduces_samples_at_tiny_lambda(self, k200, eta_x):
        mics = np.array(
            [[0.1, 0.0, 0.0], [-0.1, 0.05, 0.0], [0.0, -0.1, 0.02], [0.05, 0.1, -0.03]]
        )
        g = kianc.gram(mics, k200, kianc.KernelParams(0.0, eta_x, lam=1e-9))
        for m in range(4):
            z = kianc.interp_filter(mics[m], g)
            np.testing.assert_allclose(z, np.eye(4)[m], atol=1e-5)

    def test_large_lambda_shrinks_filter(self, k200, eta_x):
        mics = np.array([[0.1, 0.0, 0.0], [-0.1, 0.05, 0.0]])
        lam = 1e9
        g = kianc.gram(mics, k200, kianc.KernelParams(0.0, eta_x, lam=lam))
        r = np.array([0.0, 0.05, 0.0])
        z = kianc.interp_filter(r, g)
        kvec = kernel.kappa_matrix(r, mics, k200, 0.0, eta_x)[0]
        np.testing.assert_allclose(z, kvec / lam, rtol=1e-6)
        assert np.linalg.norm(z) < 1e-8

    def test_directional_weighting_helps_plane_wave(self, paper_scenario, k200):
        # plane wave arriving from direction eta (propagating along -eta)
        eta = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        mics = paper_scenario.error_mics
        grid = kianc.eval_grid(paper_scenario.region, counts=(9, 9, 3))

        def wave(pts):
            return np.exp(-1j * k200.k * (pts @ eta))

        e = wave(mics)
        errors = {}
        for beta in (0.0, 10.0):
            g = kianc.gram(mics, k200, kianc.KernelParams(beta, eta))
            z = kianc.interp_filter_matrix(grid, g)
            est = z @ e
            errors[beta] = np.linalg.norm(est - wave(grid.points)) / np.linalg.norm(
                wave(grid.points)
            )
        assert errors[10.0] < errors[0.0]

    def test_directional_weighting_helps_point_source(self, paper_scenario, k200):
        # built-in orientation self-check: error must fall as beta grows
        src = paper_scenario.primary_source
        eta = kianc.direction_to(src, paper_scenario.region.center)
        mics = paper_scenario.error_mics
        grid = kianc.eval_grid(paper_scenario.region, counts=(9, 9, 3))
        truth = kianc.green(src, grid.points, k200)
        e = kianc.green(src, mics, k200)
        errs = []
        for beta in (0.0, 2.0, 5.0, 10.0):
            g = kianc.gram(mics, k200, kianc.KernelParams(beta, eta))
            est = kianc.interp_filter_matrix(grid, g) @ e
            errs.append(np.linalg.norm(est - truth) / np.linalg.norm(truth))
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 0.1 * errs[0]


class TestInterpMatrixTotal:
    def test_single_sample_single_mic(self, k200, eta_x):
        mics = np.array([[0.05, 0.0, 0.0]])
        params = kianc.KernelParams(0.0, eta_x, lam=1e-3)
        samples = kianc.SampleSet(points=np.array([[0.02, 0.01, 0.0]]), weight=0.036)
        a = kianc.interp_matrix_total(mics, k200, params, samples)
        kv = kianc.kappa(samples.points[0], mics[0], k200, 0.0, eta_x)
        p = 1.0 / (1.0 + params.lam)  # K = [[1]] for beta = 0
        expected = samples.weight * abs(p) ** 2 * abs(kv) ** 2
        assert np.isclose(a[0, 0].real, expected, rtol=1e-12)
        assert a.shape == (1, 1)

    def test_paper_matrix_hermitian_psd(self, paper_scenario, k200):
        eta = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        params = kianc.KernelParams(2.0, eta)
        samples = kianc.monte_carlo_samples(paper_scenario.region, 2500, seed=7)
        a = kianc.interp_matrix_total(paper_scenario.error_mics, k200, params, samples)
        assert a.shape == (48, 48)
        norm = np.linalg.norm(a, 2)
        assert np.linalg.norm(a - a.conj().T, 2) <= 1e-10 * norm
        assert np.linalg.eigvalsh(a).min() >= -1e-10 * norm

    def test_two_sample_sets_agree_at_mc_scale(self, paper_scenario, k200):
        eta = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        params = kianc.KernelParams(2.0, eta)
        s1 = kianc.monte_carlo_samples(paper_scenario.region, 2500, seed=100)
        s2 = kianc.monte_carlo_samples(paper_scenario.region, 2500, seed=200)
        a1 = kianc.interp_matrix_total(paper_scenario.error_mics, k200, params, s1)
        a2 = kianc.interp_matrix_total(paper_scenario.error_mics, k200, params, s2)
        rel = np.linalg.norm(a1 - a2) / np.linalg.norm(a1)
        # independent 2500-sample estimates agree at the ~2/sqrt(2500) scale
        assert rel < 0.05


class TestIndividualMatrices:
    def _setup(self, paper_scenario, k200, beta):
        eta_p = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        dirs = np.array(
            [
                kianc.direction_to(s, paper_scenario.region.center)
                for s in paper_scenario.secondary_sources
            ]
        )
        g_hat = kianc.transfer_matrix(
            paper_scenario.secondary_sources, paper_scenario.error_mics, k200
        )
        samples = kianc.monte_carlo_samples(paper_scenario.region, 2500, seed=7)
        return eta_p, dirs, g_hat, samples

    def test_uniform_kernels_reduce_to_total(self, paper_scenario, k200):
        eta_p, _, g_hat, samples = self._setup(paper_scenario, k200, 2.0)
        params = kianc.KernelParams(2.0, eta_p)
        # same direction and sharpness for the primary and all secondaries
        dirs_same = np.tile(eta_p, (16, 1))
        mats = kianc.interp_matrices_individual(
            paper_scenario.error_mics, k200, params, dirs_same, 2.0, params.lam, g_hat, samples
        )
        a = kianc.interp_matrix_total(paper_scenario.error_mics, k200, params, samples)
        a_yd_ref = g_hat.conj().T @ a
        a_yy_ref = g_hat.conj().T @ a @ g_hat
        assert np.linalg.norm(mats.a_yd - a_yd_ref) <= 1e-10 * np.linalg.norm(a_yd_ref)
        assert np.linalg.norm(mats.a_yy - a_yy_ref) <= 1e-10 * np.linalg.norm(a_yy_ref)

    def test_zero_model_column_zeroes_matrices(self, k200, eta_x):
        mics = np.array([[0.1, 0.0, 0.0], [-0.1, 0.05, 0.0], [0.0, -0.1, 0.02]])
        params = kianc.KernelParams(1.0, eta_x)
        samples = kianc.SampleSet(points=np.array([[0.0, 0.0, 0.0], [0.05, 0.0, 0.0]]), weight=0.018)
        g_hat = np.zeros((3, 1), dtype=complex)
        mats = kianc.interp_matrices_individual(
            mics, k200, params, np.array([eta_x]), 1.0, params.lam, g_hat, samples
        )
        assert np.all(mats.a_yd == 0)
        assert np.all(mats.a_yy == 0)
        assert np.any(mats.a_dd != 0)

    def test_paper_matrices_hermitian_psd(self, paper_scenario, k200):
        eta_p, dirs, g_hat, samples = self._setup(paper_scenario, k200, 10.0)
        params = kianc.KernelParams(10.0, eta_p)
        mats = kianc.interp_matrices_individual(
            paper_scenario.error_mics, k200, params, dirs, 10.0, params.lam, g_hat, samples
        )
        for name, mat in (("a_dd", mats.a_dd), ("a_yy", mats.a_yy)):
            norm = np.linalg.norm(mat, 2)
            assert np.linalg.norm(mat - mat.conj().T, 2) <= 1e-10 * norm, name
            assert np.linalg.eigvalsh(mat).min() >= -1e-10 * norm, name
        assert mats.a_yd.shape == (16, 48)

    def test_dimension_mismatch_rejected(self, k200, eta_x):
        mics = np.array([[0.1, 0.0, 0.0], [-0.1, 0.05, 0.0]])
        params = kianc.KernelParams(1.0, eta_x)
        samples = kianc.SampleSet(points=np.array([[0.0, 0.0, 0.0]]), weight=1.0)
        with pytest.raises(ValueError):
            kianc.interp_matrices_individual(
                mics, k200, params, np.array([eta_x]), 1.0, 1e-3,
                np.zeros((3, 1), dtype=complex), samples,
            )


class TestEstimateFields:
    def _filters(self, paper_scenario, k200, beta, points):
        eta_p = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        dirs = np.array(
            [
                kianc.direction_to(s, paper_scenario.region.center)
                for s in paper_scenario.secondary_sources
            ]
        )
        g_hat = kianc.transfer_matrix(
            paper_scenario.secondary_sources, paper_scenario.error_mics, k200
        )
        return kianc.individual_filters(
            paper_scenario.error_mics, k200, kianc.KernelParams(beta, eta_p),
            dirs, beta, 1e-3, g_hat, points,
        ), g_hat

    def test_zero_drive_gives_primary(self, paper_scenario, k200):
        grid = kianc.eval_grid(paper_scenario.region, counts=(5, 5, 3))
        filters, _ = self._filters(paper_scenario, k200, 10.0, grid)
        d_hat = np.ones(48, dtype=complex)
        u_p, u_s, u_e = kianc.estimate_fields(d_hat, np.zeros(16, dtype=complex), filters)
        assert np.all(u_s == 0)
        np.testing.assert_array_equal(u_e, u_p)

    def test_zero_primary_gives_secondary(self, paper_scenario, k200):
        grid = kianc.eval_grid(paper_scenario.region, counts=(5, 5, 3))
        filters, _ = self._filters(paper_scenario, k200, 10.0, grid)
        y = np.ones(16, dtype=complex)
        u_p, u_s, u_e = kianc.estimate_fields(np.zeros(48, dtype=complex), y, filters)
        assert np.all(u_p == 0)
        np.testing.assert_array_equal(u_e, u_s)

    def test_directional_primary_estimate_beats_uniform(self, paper_scenario, k200):
        grid = kianc.eval_grid(paper_scenario.region, counts=(9, 9, 3))
        truth = kianc.green(paper_scenario.primary_source, grid.points, k200)
        d = kianc.green(paper_scenario.primary_source, paper_scenario.error_mics, k200)
        errs = {}
        for beta in (0.0, 10.0):
            filters, _ = self._filters(paper_scenario, k200, beta, grid)
            u_p, _, _ = kianc.estimate_fields(d, np.zeros(16, dtype=complex), filters)
            errs[beta] = np.linalg.norm(u_p - truth) / np.linalg.norm(truth)
        assert errs[10.0] < errs[0.0]


class TestMatrixCache:
    def test_save_load_roundtrip(self, tmp_path, paper_scenario, k200):
        eta = kianc.direction_to(paper_scenario.primary_source, paper_scenario.region.center)
        params = kianc.KernelParams(2.0, eta)
        samples = kianc.monte_carlo_samples(paper_scenario.region, 200, seed=7)
        a = kianc.interp_matrix_total(paper_scenario.error_mics, k200, params, samples)
        mats = kianc.InterpMatrices(a=a, n_samples=200, seed=7)
        path = tmp_path / "mats.npz"
        kernel.save_matrices(path, mats)
        loaded = kernel.load_matrices(path)
        assert np.array_equal(loaded.a, a)
        assert loaded.a_dd is None
        assert loaded.n_samples == 200 and loaded.seed == 7
