import math

import numpy as np
import pytest

from coefficients import ConstantCoefficient, GaussCoefficient, QuadraticCoefficient
from phase_model import PhaseMethod, build_phase_spectral
from reference_oracle import analytic_constant, self_reference
from wkb_solver import (InitialData, SchemeConfig, StateU, StateZ, Trajectory,
                        WKBSolver, back_transform, h1_kernel, h2_kernel,
                        initial_U, recover_wavefunction, solve, to_Z)

SQRT2 = np.sqrt(2.0)


@pytest.fixture
def gauss():
    return GaussCoefficient()


def gauss_solver(order=2, eps=0.1, n_grid=11, method=PhaseMethod.SPECTRAL):
    return WKBSolver(SchemeConfig(order, eps, n_grid, method), GaussCoefficient())


class TestInitialData:
    def test_constant(self):
        u = initial_U(InitialData(1.0, -1j), ConstantCoefficient(), 0.1)
        assert (u.u1, u.u2) == (1.0, -1j)

    def test_gauss_flat_at_origin(self, gauss):
        u = initial_U(InitialData(), gauss, 0.01)
        assert u.u1 == pytest.approx(1.0)
        assert u.u2 == pytest.approx(-1j)

    def test_quadratic_derivative_term(self):
        eps = 0.01
        u = initial_U(InitialData(1.0, 0.0), QuadraticCoefficient(), eps)
        # (a^1/4)'(0) = 1 / (2 sqrt(1/2)), sqrt(a(0)) = 1/2
        assert u.u1 == pytest.approx(np.sqrt(0.5), rel=1e-15)
        assert u.u2 == pytest.approx(eps * (0.5 / np.sqrt(0.5)) / 0.5, rel=1e-14)
        assert u.u2 == pytest.approx(0.0141421356237, rel=1e-11)

    def test_recover_round_trip(self, gauss):
        data = InitialData(0.3 - 0.2j, 1.1 + 0.4j)
        u = initial_U(data, QuadraticCoefficient(), 0.05)
        phi, eps_dphi = recover_wavefunction(u, QuadraticCoefficient(), 0.0, 0.05)
        assert phi == pytest.approx(data.phi0, abs=1e-13)
        assert eps_dphi == pytest.approx(data.phi1, abs=1e-13)

    def test_recover_constant_is_identity(self):
        phi, eps_dphi = recover_wavefunction(StateU(0.2 + 1j, -0.5j), ConstantCoefficient(), 0.7, 0.1)
        assert (phi, eps_dphi) == (0.2 + 1j, -0.5j)

    def test_recover_rejects_nonpositive_a(self):
        class Negative(ConstantCoefficient):
            def derivatives(self, x, order=5):
                return -super().derivatives(x, order)

        with pytest.raises(ValueError, match="a\\(x\\) <= 0"):
            recover_wavefunction(StateU(1.0, 0.0), Negative(), 0.5, 0.1)


class TestTransforms:
    def test_to_z_example(self):
        z = to_Z(StateU(1.0, -1j))
        assert abs(z.z1) < 1e-16
        assert z.z2 == pytest.approx(SQRT2, rel=1e-15)

    def test_to_z_zero(self):
        assert to_Z(StateU(0.0, 0.0)) == StateZ(0.0, 0.0)

    def test_unitary(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            u = StateU(complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
            assert to_Z(u).norm() == pytest.approx(u.norm(), rel=1e-14)
            back = back_transform(StateZ(*to_Z(u).as_array()), rng.uniform(0, 3), 0.01)
            assert back.norm() == pytest.approx(u.norm(), rel=1e-14)

    def test_round_trip_at_zero_phase(self):
        u = StateU(0.4 - 1.2j, 2.0 + 0.1j)
        back = back_transform(to_Z(u), 0.0, 0.1)
        np.testing.assert_allclose(back.as_array(), u.as_array(), atol=1e-14)


class TestKernels:
    def test_zero(self):
        assert h1_kernel(0.0) == 0.0
        assert h2_kernel(0.0) == 0.0

    def test_pi(self):
        assert h1_kernel(np.pi) == pytest.approx(-2.0, abs=1e-15)

    def test_small_argument(self):
        value = h2_kernel(1e-8)
        assert value.real == pytest.approx(-5e-17, rel=1e-10)
        assert value.imag == pytest.approx(-1e-24 / 6.0, rel=1e-10)

    @pytest.mark.parametrize("x", [0.0099, -0.0099, 0.0101, -0.0101])
    def test_continuous_across_series_cutoff(self, x):
        direct_h1 = np.exp(1j * x) - 1.0
        assert h1_kernel(x) == pytest.approx(direct_h1, rel=1e-13)
        taylor_h2 = sum((1j * x) ** k / math.factorial(k) for k in range(2, 12))
        assert h2_kernel(x) == pytest.approx(taylor_h2, rel=1e-11)

    def test_vectorised(self):
        x = np.array([-2.0, -1e-5, 0.0, 1e-3, 3.0])
        np.testing.assert_allclose(h1_kernel(x), [h1_kernel(v) for v in x], rtol=1e-14)
        np.testing.assert_allclose(h2_kernel(x), [h2_kernel(v) for v in x], rtol=1e-14)

    def test_conjugation_identity(self):
        x = np.linspace(-5.0, 5.0, 41)
        np.testing.assert_allclose(np.conj(h1_kernel(-x)), h1_kernel(x), atol=1e-16)
        np.testing.assert_allclose(np.conj(h2_kernel(-x)), h2_kernel(x), atol=1e-16)


class TestSchemeConfig:
    def test_from_step(self):
        scheme = SchemeConfig.from_step(1e-3, 2, 0.1)
        assert scheme.n_grid == 1001
        assert scheme.h == pytest.approx(1e-3)
        assert scheme.grid[0] == 0.0 and scheme.grid[-1] == 1.0

    def test_step_not_reciprocal_integer(self):
        with pytest.raises(ValueError, match="1/\\(N-1\\)"):
            SchemeConfig.from_step(0.3, 1, 0.1)

    @pytest.mark.parametrize("kwargs", [dict(order=3, epsilon=0.1, n_grid=5),
                                        dict(order=1, epsilon=0.0, n_grid=5),
                                        dict(order=1, epsilon=0.1, n_grid=1)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SchemeConfig(**kwargs)


class TestMatrices:
    @pytest.mark.parametrize("n", range(10))
    def test_conjugate_structure(self, n):
        solver = gauss_solver(n_grid=11)
        a1, a2, a3 = solver.assemble_a1(n), solver.assemble_a2(n), solver.assemble_a3(n)
        for a in (a1, a2):
            assert a[0, 0] == 0.0 and a[1, 1] == 0.0
            assert a[0, 1] == np.conj(a[1, 0])
        assert a3[0, 1] == 0.0 and a3[1, 0] == 0.0
        assert a3[1, 1] == np.conj(a3[0, 0])

    @pytest.mark.parametrize("method", [PhaseMethod.SPECTRAL, PhaseMethod.ANALYTIC,
                                        PhaseMethod.SIMPSON])
    def test_constant_coefficient_is_zero(self, method):
        solver = WKBSolver(SchemeConfig(2, 0.1, 11, method), ConstantCoefficient())
        for n in (0, 4, 9):
            for a in (solver.assemble_a1(n), solver.assemble_a2(n), solver.assemble_a3(n)):
                assert np.all(a == 0.0)

    def test_step_index_range(self):
        with pytest.raises(ValueError, match="step index"):
            gauss_solver(n_grid=11).assemble_a1(10)

    def test_step_norm_growth(self):
        solver = gauss_solver(order=2, eps=0.1, n_grid=11)
        bound = 1.0 + 2.0 * 0.1 * solver.phase.beta_sup() * solver.scheme.h
        z = StateZ(0.3 + 0.1j, 1.0 - 0.2j)
        for n in range(10):
            nxt = solver.step(z, n)
            assert nxt.norm() <= bound * z.norm()
            z = nxt


class TestSolve:
    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("method", [PhaseMethod.SPECTRAL, PhaseMethod.ANALYTIC])
    def test_zero_beta_keeps_z(self, order, method):
        scheme = SchemeConfig(order, 0.01, 101, method)
        traj = solve(scheme, ConstantCoefficient(), InitialData())
        assert np.all(traj.z == traj.z[0])

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-5])
    @pytest.mark.parametrize("n_grid", [2, 11, 1001])
    def test_constant_matches_plane_wave(self, order, eps, n_grid):
        data = InitialData()
        scheme = SchemeConfig(order, eps, n_grid, PhaseMethod.ANALYTIC)
        traj = solve(scheme, ConstantCoefficient(), data)
        wave = np.exp(-1j * traj.x / eps)
        np.testing.assert_allclose(traj.u[:, 0], wave, atol=1e-12)
        np.testing.assert_allclose(traj.u[:, 1], -1j * wave, atol=1e-12)
        phi, eps_dphi = analytic_constant(data, eps, traj.x)
        np.testing.assert_allclose(traj.phi, phi, atol=1e-12)
        np.testing.assert_allclose(traj.eps_dphi, eps_dphi, atol=1e-12)

    @pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
    def test_constant_with_spectral_phase(self, eps):
        scheme = SchemeConfig(2, eps, 1001)
        traj = solve(scheme, ConstantCoefficient(), InitialData())
        np.testing.assert_allclose(traj.u[:, 0], np.exp(-1j * traj.x / eps), atol=1e-12)

    def test_structure_preserved_for_real_data(self, gauss):
        scheme = SchemeConfig(2, 0.1, 10001)
        traj = solve(scheme, gauss, InitialData(1.0, 0.3))
        z1, z2 = traj.z[:, 0], traj.z[:, 1]
        assert np.max(np.abs(z2 - 1j * np.conj(z1))) <= 1e-12

    def test_unitary_recovery(self, gauss):
        traj = solve(SchemeConfig(1, 0.01, 501), gauss, InitialData())
        norm_u, norm_z = traj.norms()
        np.testing.assert_allclose(norm_u, norm_z, atol=1e-14)

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
    def test_discrete_norm_bound(self, gauss, order, eps):
        solver = WKBSolver(SchemeConfig(order, eps, 101), gauss)
        traj = solver.solve(InitialData())
        bound = np.exp(eps * solver.phase.beta_sup() * traj.x) * np.linalg.norm(traj.z[0])
        assert np.all(np.linalg.norm(traj.z, axis=1) <= bound * (1.0 + 1e-6))

    def test_stride_matches_full_run(self, gauss):
        solver = WKBSolver(SchemeConfig(2, 0.05, 201), gauss)
        full = solver.solve(InitialData())
        strided = solver.solve(InitialData(), stride=20)
        assert len(strided) == 11
        np.testing.assert_array_equal(strided.z, full.z[::20])
        np.testing.assert_array_equal(strided.u, full.u[::20])

    def test_stride_must_divide(self, gauss):
        with pytest.raises(ValueError, match="stride"):
            WKBSolver(SchemeConfig(2, 0.05, 201), gauss).solve(InitialData(), stride=7)

    def test_chunking_does_not_change_result(self, gauss):
        solver = WKBSolver(SchemeConfig(2, 0.05, 201), gauss)
        whole = solver.solve(InitialData())
        pieces = solver.solve(InitialData(), chunk_size=7)
        np.testing.assert_allclose(whole.z, pieces.z, atol=1e-14)

    def test_simpson_chunking(self, gauss):
        solver = WKBSolver(SchemeConfig(1, 0.05, 201, PhaseMethod.SIMPSON), gauss)
        whole = solver.solve(InitialData())
        pieces = solver.solve(InitialData(), chunk_size=13)
        np.testing.assert_allclose(whole.u, pieces.u, atol=1e-11)

    def test_step_agrees_with_solve(self, gauss):
        solver = gauss_solver(order=2, eps=0.1, n_grid=11)
        traj = solver.solve(InitialData())
        z = StateZ(*traj.z[0])
        for n in range(10):
            z = solver.step(z, n)
        np.testing.assert_allclose(z.as_array(), traj.z[-1], atol=1e-14)

    def test_against_fine_grid(self, gauss):
        scheme = SchemeConfig.from_step(1e-3, 2, 0.1)
        phase = build_phase_spectral(gauss, 0.1)
        traj = solve(scheme, gauss, InitialData(), phase=phase)
        ref = self_reference(scheme, gauss, InitialData(), 64, phase=phase, estimate=False)
        assert np.max(np.linalg.norm(traj.u - ref.u, axis=1)) <= 1e-8

    def test_rejects_inadmissible_epsilon(self, gauss):
        with pytest.raises(ValueError, match="not admissible"):
            solve(SchemeConfig(1, 1.5, 11), gauss, InitialData())

    def test_rejects_zero_chunk(self):
        with pytest.raises(ValueError, match="chunk_size"):
            gauss_solver().solve(InitialData(), chunk_size=0)


class TestTrajectory:
    def test_frame_columns(self, gauss):
        traj = solve(SchemeConfig(1, 0.1, 6), gauss, InitialData())
        frame = traj.to_frame()
        assert list(frame.columns) == ["x", "re_u1", "im_u1", "re_u2", "im_u2",
                                       "re_z1", "im_z1", "re_z2", "im_z2", "phi_tilde"]
        assert len(frame) == 6
        assert frame["phi_tilde"].iloc[0] == 0.0

    def test_shape_check(self):
        with pytest.raises(ValueError, match="trajectory arrays"):
            Trajectory(x=np.zeros(3), z=np.zeros((2, 2)), u=np.zeros((3, 2)),
                       phi_tilde=np.zeros(3))
