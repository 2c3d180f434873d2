import numpy as np
import pytest
from scipy.optimize import brentq

from basisprec.basis import BasisMatrix, NodeGrid, build_single_grid
from basisprec.dcfit import FitReport, build_penalty, dc_fit, dc_gradient
from basisprec.likelihood import (
    LikelihoodKernel,
    empirical_cov_projections,
    penalized_objective,
)

from conftest import rand_kernel, rand_spd


def concave_part(q, kernel, tau_sq):
    """Direct evaluation of the linearized part of the likelihood."""
    p = q + kernel.phi_t_phi / tau_sq
    a = kernel.phi_t_s_phi / tau_sq**2
    sign, logdet = np.linalg.slogdet(p)
    assert sign > 0
    return logdet - np.trace(a @ np.linalg.inv(p))


class TestDcGradient:
    def test_zero_basis_gives_inverse(self, rng):
        phi = BasisMatrix(np.zeros((5, 3)))
        y = rng.standard_normal((5, 4))
        kernel = empirical_cov_projections(y, phi)
        q = rand_spd(rng, 3)
        np.testing.assert_allclose(dc_gradient(q, kernel, 1.0),
                                   np.linalg.inv(q), rtol=1e-10)

    def test_matches_finite_differences(self, rng):
        phi, y, s_dense, kernel = rand_kernel(rng, n=8, ell=3)
        q = rand_spd(rng, 3)
        tau_sq = 0.7
        g = dc_gradient(q, kernel, tau_sq)
        h = 1e-5
        for i in range(3):
            for j in range(i, 3):
                e = np.zeros((3, 3))
                e[i, j] = e[j, i] = 1.0  # symmetric-perturbation convention
                fd = (concave_part(q + h * e, kernel, tau_sq)
                      - concave_part(q - h * e, kernel, tau_sq)) / (2 * h)
                expect = g[i, j] * (2.0 if i != j else 1.0)
                assert fd == pytest.approx(expect, rel=1e-5)

    def test_output_symmetric_positive_definite(self, rng):
        for _ in range(5):
            phi, y, s_dense, kernel = rand_kernel(rng, n=10, ell=4)
            q = rand_spd(rng, 4)
            g = dc_gradient(q, kernel, 0.5)
            np.testing.assert_array_equal(g, g.T)
            assert np.linalg.eigvalsh(g)[0] > 0

    def test_psd_lower_bound(self, rng):
        # G = M + M A M dominates M when A is PSD
        phi, y, s_dense, kernel = rand_kernel(rng, n=10, ell=4)
        q = rand_spd(rng, 4)
        g = dc_gradient(q, kernel, 1.2)
        m = np.linalg.inv(q + kernel.phi_t_phi / 1.2)
        assert np.linalg.eigvalsh(g)[0] >= np.linalg.eigvalsh(m)[0] - 1e-12


class TestBuildPenalty:
    def test_constant_form(self):
        spec = build_penalty("constant-offdiag", 0.05, n_cols=3)
        expect = 0.05 * (1 - np.eye(3))
        np.testing.assert_array_equal(spec.matrix, expect)

    def test_distance_form_hand_values(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        grid = NodeGrid(nodes, np.ones(3), np.ones(3, dtype=int))
        spec = build_penalty("distance-scaled", 2.0, grid=grid)
        expect = 2.0 * np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
        np.testing.assert_allclose(spec.matrix, expect)

    def test_coincident_nodes_zero_penalty(self):
        nodes = np.array([[0.0, 0.0], [0.0, 0.0]])
        grid = NodeGrid(nodes, np.ones(2), np.array([1, 2]))
        spec = build_penalty("distance-scaled", 1.0, grid=grid)
        # documented hazard: distinct co-located nodes get zero weight
        assert spec.matrix[0, 1] == 0.0

    def test_global_rows_held_at_gamma(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0]])
        grid = NodeGrid(nodes, np.ones(2), np.ones(2, dtype=int))
        spec = build_penalty("distance-scaled", 3.0, grid=grid, gamma=0.7,
                             n_global=1)
        assert spec.matrix.shape == (3, 3)
        np.testing.assert_allclose(spec.matrix[2, :2], [0.7, 0.7])
        np.testing.assert_allclose(spec.matrix[:2, 2], [0.7, 0.7])
        assert spec.matrix[2, 2] == 0.0

    def test_missing_geometry_rejected(self):
        with pytest.raises(ValueError):
            build_penalty("distance-scaled", 1.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            build_penalty("constant-offdiag", -0.1, n_cols=3)


class TestDcFit:
    def test_huge_penalty_diagonal_stationarity(self, rng):
        # simulated signal keeps the diagonal-only optimum interior
        from basisprec.graphs import gen_band
        from basisprec.simulate import simulate_replicates

        ell = 4
        phi = BasisMatrix(rng.standard_normal((40, ell)))
        truth = gen_band(ell)
        ds = simulate_replicates(phi, truth, m=60, noise_to_signal=0.1, seed=9)
        kernel = empirical_cov_projections(ds.y, phi)
        tau_sq = ds.tau_sq_true
        pen = build_penalty("constant-offdiag", 1e7, n_cols=ell)
        report = dc_fit(kernel, tau_sq, pen, eps=1e-12, max_iters=500,
                        inner_tol=1e-10)
        q = report.q_hat
        assert np.all(q - np.diag(np.diag(q)) == 0.0)
        # each diagonal entry is a root of d/dQ_ii of the unpenalized
        # likelihood holding the others fixed
        for i in range(ell):
            def resid(x):
                qi = q.copy()
                qi[i, i] = x
                return dc_gradient(qi, kernel, tau_sq)[i, i] - 1.0 / x
            assert abs(resid(q[i, i])) * q[i, i] < 1e-5  # relative to 1/q_ii
            root = brentq(resid, q[i, i] * 0.2, q[i, i] * 5.0, xtol=1e-14)
            assert root == pytest.approx(q[i, i], rel=1e-4)

    def test_objective_trace_monotone(self, rng):
        for _ in range(3):
            phi, y, s_dense, kernel = rand_kernel(rng, n=15, ell=5, m=12)
            pen = build_penalty("constant-offdiag", 0.1, n_cols=5)
            report = dc_fit(kernel, 1.0, pen)
            assert report.monotonicity_violations == 0
            trace = np.asarray(report.objective_trace)
            assert np.all(np.diff(trace) <= 1e-8 * np.abs(trace[:-1]))

    def test_single_iteration_control(self, rng):
        phi, y, s_dense, kernel = rand_kernel(rng, n=10, ell=3)
        pen = build_penalty("constant-offdiag", 0.05, n_cols=3)
        report = dc_fit(kernel, 1.0, pen, eps=0.0, max_iters=1)
        assert report.iterations == 1
        assert report.stop_reason == "max_iters"
        # equals one inner solve from the identity
        from basisprec.glasso import GlassoProblem, glasso_solve
        g = dc_gradient(np.eye(3), kernel, 1.0)
        sol = glasso_solve(GlassoProblem(g=g, lam=pen.matrix, q_init=np.eye(3)))
        np.testing.assert_allclose(report.q_hat, sol.q, rtol=1e-12)

    def test_fixed_point_no_spurious_updates(self, rng):
        from basisprec.graphs import gen_band
        from basisprec.simulate import simulate_replicates

        phi = BasisMatrix(rng.standard_normal((30, 3)))
        truth = gen_band(3)
        ds = simulate_replicates(phi, truth, m=40, noise_to_signal=0.1, seed=4)
        kernel = empirical_cov_projections(ds.y, phi)
        pen = build_penalty("constant-offdiag", 0.1, n_cols=3)
        full = dc_fit(kernel, ds.tau_sq_true, pen, eps=1e-8, max_iters=500)
        assert full.converged
        again = dc_fit(kernel, ds.tau_sq_true, pen, q0=full.q_hat, eps=1e-8)
        assert again.iterations == 1
        assert again.converged

    def test_deterministic(self, rng):
        phi, y, s_dense, kernel = rand_kernel(rng, n=10, ell=4)
        pen = build_penalty("constant-offdiag", 0.08, n_cols=4)
        r1 = dc_fit(kernel, 0.9, pen)
        r2 = dc_fit(kernel, 0.9, pen)
        np.testing.assert_array_equal(r1.q_hat, r2.q_hat)
        assert r1.objective_trace == r2.objective_trace

    def test_report_fields_and_config_echo(self, rng):
        phi, y, s_dense, kernel = rand_kernel(rng, n=8, ell=3)
        pen = build_penalty("constant-offdiag", 0.05, n_cols=3)
        report = dc_fit(kernel, 1.1, pen, eps=0.02)
        assert report.converged and report.stop_reason == "tolerance"
        assert report.config["eps"] == 0.02
        assert report.config["penalty"]["lam"] == 0.05
        d = report.to_dict()
        assert "wall_time" not in d
        assert d["iterations"] == report.iterations
        np.linalg.cholesky(report.q_hat)

    def test_recovery_beats_initial_guess(self, rng):
        # small end-to-end sanity: the fit moves the identity toward truth
        from basisprec.graphs import gen_band
        from basisprec.simulate import simulate_replicates
        from basisprec.basis import build_harmonic_basis
        from basisprec.likelihood import estimate_nugget

        n, ell, m = 400, 16, 100
        pts = rng.uniform(0, np.sqrt(n), size=(n, 2))
        phi = build_harmonic_basis(pts, ell=ell, n=n)
        truth = gen_band(ell)
        ds = simulate_replicates(phi, truth, m=m, noise_to_signal=0.1, seed=5)
        kernel = empirical_cov_projections(ds.y, phi)
        tau_sq = estimate_nugget(kernel).tau_sq
        pen = build_penalty("constant-offdiag", 0.01, n_cols=ell)
        report = dc_fit(kernel, tau_sq, pen)
        err_fit = np.linalg.norm(report.q_hat - truth.q, "fro")
        err_init = np.linalg.norm(np.eye(ell) - truth.q, "fro")
        assert report.converged
        assert err_fit < 0.5 * err_init
