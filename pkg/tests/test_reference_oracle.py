import numpy as np
import pytest

from coefficients import ConstantCoefficient, GaussCoefficient
from phase_model import build_phase_spectral
from reference_oracle import (OracleMethod, analytic_constant, analytic_reference,
                              brute_force_M, rk_reference, self_reference)
from wkb_solver import InitialData, SchemeConfig, StateZ, WKBSolver, solve

NODES = np.linspace(0.0, 1.0, 11)


@pytest.fixture
def gauss():
    return GaussCoefficient()


class TestRKReference:
    def test_constant_matches_plane_wave(self):
        ref = rk_reference(ConstantCoefficient(), InitialData(), 0.1, 1e-12, NODES)
        assert ref.method == OracleMethod.RK
        assert ref.estimated_accuracy == pytest.approx(1e-11)
        wave = np.exp(-1j * NODES / 0.1)
        np.testing.assert_allclose(ref.u[:, 0], wave, atol=1e-9)
        np.testing.assert_allclose(ref.u[:, 1], -1j * wave, atol=1e-9)

    def test_constant_energy(self):
        ref = rk_reference(ConstantCoefficient(), InitialData(0.7, 0.2j), 0.1, 1e-12, NODES)
        energy = np.abs(ref.u[:, 0]) ** 2 + np.abs(ref.u[:, 1]) ** 2
        np.testing.assert_allclose(energy, energy[0], atol=1e-9)

    def test_agrees_with_second_order_scheme(self, gauss):
        scheme = SchemeConfig.from_step(1e-3, 2, 0.1)
        traj = solve(scheme, gauss, InitialData())
        ref = rk_reference(gauss, InitialData(), 0.1, 1e-12, traj.x[::100])
        assert np.max(np.linalg.norm(traj.u[::100] - ref.u, axis=1)) <= 1e-8

    @pytest.mark.slow
    def test_oracle_equivalence_small_epsilon(self, gauss):
        scheme = SchemeConfig.from_step(1e-3, 2, 1e-2)
        traj = solve(scheme, gauss, InitialData())
        ref = rk_reference(gauss, InitialData(), 1e-2, 1e-12, traj.x)
        assert np.max(np.linalg.norm(traj.u - ref.u, axis=1)) <= 1e-6

    def test_rejects_small_epsilon(self, gauss):
        with pytest.raises(ValueError, match="epsilon"):
            rk_reference(gauss, InitialData(), 1e-4, 1e-12, NODES)

    def test_rejects_tight_tolerance(self, gauss):
        with pytest.raises(ValueError, match="tolerance"):
            rk_reference(gauss, InitialData(), 0.1, 1e-14, NODES)

    def test_zero_tolerance_is_not_the_default(self, gauss):
        with pytest.raises(ValueError, match="tolerance"):
            rk_reference(gauss, InitialData(), 0.1, 0.0, NODES)

    def test_rejects_unsorted_nodes(self, gauss):
        with pytest.raises(ValueError, match="increasing"):
            rk_reference(gauss, InitialData(), 0.1, 1e-12, [0.0, 0.5, 0.2])


class TestSelfReference:
    def test_refine_one_is_base_run(self, gauss):
        scheme = SchemeConfig(2, 0.1, 21)
        phase = build_phase_spectral(gauss, 0.1)
        base = WKBSolver(scheme, gauss, phase).solve(InitialData())
        ref = self_reference(scheme, gauss, InitialData(), refine=1, phase=phase)
        np.testing.assert_array_equal(ref.u, base.u)
        assert np.isnan(ref.estimated_accuracy)

    def test_restricted_to_coarse_nodes(self, gauss):
        scheme = SchemeConfig(1, 0.1, 11)
        ref = self_reference(scheme, gauss, InitialData(), refine=16)
        assert len(ref) == 11
        np.testing.assert_allclose(ref.x, scheme.grid, atol=1e-15)
        assert ref.z is not None

    def test_richardson_sanity(self, gauss):
        scheme = SchemeConfig(2, 0.1, 101)
        phase = build_phase_spectral(gauss, 0.1)
        traj = WKBSolver(scheme, gauss, phase).solve(InitialData())
        ref64 = self_reference(scheme, gauss, InitialData(), 64, phase=phase)
        ref128 = self_reference(scheme, gauss, InitialData(), 128, phase=phase, estimate=False)
        scheme_error = np.max(np.linalg.norm(traj.u - ref64.u, axis=1))
        refine_gap = np.max(np.linalg.norm(ref64.u - ref128.u, axis=1))
        assert refine_gap * 1e2 <= scheme_error
        assert 0.0 < ref64.estimated_accuracy < scheme_error

    def test_invalid_refine(self, gauss):
        with pytest.raises(ValueError, match="refine"):
            self_reference(SchemeConfig(1, 0.1, 11), gauss, InitialData(), refine=-2)

    def test_zero_refine_is_not_the_default(self, gauss):
        with pytest.raises(ValueError, match="refine must be >= 1"):
            self_reference(SchemeConfig(1, 0.1, 11), gauss, InitialData(), refine=0)


class TestAnalyticConstant:
    def test_origin(self):
        phi, eps_dphi = analytic_constant(InitialData(0.3, 2.0j), 0.01, 0.0)
        assert (phi, eps_dphi) == (0.3, 2.0j)

    def test_plane_wave(self):
        x = np.linspace(0.0, 1.0, 50)
        phi, _ = analytic_constant(InitialData(1.0, -1j), 0.01, x)
        np.testing.assert_allclose(phi, np.exp(-1j * x / 0.01), atol=1e-13)

    def test_energy(self):
        x = np.linspace(0.0, 1.0, 50)
        phi, eps_dphi = analytic_constant(InitialData(0.4, 1.5), 0.02, x)
        np.testing.assert_allclose(np.abs(phi) ** 2 + np.abs(eps_dphi) ** 2, 0.16 + 2.25, rtol=1e-14)

    def test_reference_z_is_constant(self):
        ref = analytic_reference(ConstantCoefficient(), InitialData(), 0.01, NODES)
        np.testing.assert_allclose(ref.z, np.tile([0.0, np.sqrt(2.0)], (11, 1)), atol=1e-12)

    def test_reference_needs_constant(self, gauss):
        with pytest.raises(ValueError, match="closed-form"):
            analytic_reference(gauss, InitialData(), 0.1, NODES)


class TestBruteForceM:
    def test_zero_beta(self):
        phase = build_phase_spectral(ConstantCoefficient(), 0.1)
        for p in (1, 2):
            assert np.all(brute_force_M(p, (0.0, 0.1), phase) == 0.0)

    def test_m1_structure(self, gauss):
        m1 = brute_force_M(1, (0.2, 0.3), build_phase_spectral(gauss, 0.1))
        assert m1[0, 0] == 0.0 and m1[1, 1] == 0.0
        assert abs(m1[1, 0] - np.conj(m1[0, 1])) <= 1e-12

    def test_m2_structure(self, gauss):
        m2 = brute_force_M(2, (0.0, 0.05), build_phase_spectral(gauss, 0.1))
        assert m2[0, 1] == 0.0 and m2[1, 0] == 0.0
        assert abs(m2[1, 1] - np.conj(m2[0, 0])) <= 1e-9

    def test_first_order_matrix(self, gauss):
        eps = 0.1
        solver = WKBSolver(SchemeConfig(1, eps, 11), gauss)
        m1 = brute_force_M(1, (0.1, 0.2), solver.phase)
        np.testing.assert_allclose(solver.assemble_a1(1), eps * m1, atol=1e-4)

    def test_second_order_step(self, gauss):
        eps = 0.1
        solver = WKBSolver(SchemeConfig(2, eps, 21), gauss)
        interval = (0.0, 0.05)
        m1 = brute_force_M(1, interval, solver.phase)
        m2 = brute_force_M(2, interval, solver.phase)
        z = StateZ(0.0, np.sqrt(2.0))
        picard = (np.eye(2) + eps * m1 + eps ** 2 * m2) @ z.as_array()
        assert np.max(np.abs(solver.step(z, 0).as_array() - picard)) <= 1e-7

    def test_invalid_order(self, gauss):
        with pytest.raises(ValueError, match="p must be"):
            brute_force_M(3, (0.0, 0.1), build_phase_spectral(gauss, 0.1))

    # bounds frozen at about five times the deviation measured at each point
    @pytest.mark.parametrize("eps,h,order,bound", [
        (0.1, 0.1, 1, 1e-4),
        (0.1, 0.1, 2, 2e-6),
        (0.1, 0.05, 1, 3e-5),
        (0.1, 0.05, 2, 3e-7),
        pytest.param(0.01, 0.1, 1, 1e-7, marks=pytest.mark.slow),
        pytest.param(0.01, 0.1, 2, 5e-10, marks=pytest.mark.slow),
        pytest.param(0.01, 0.05, 1, 1e-7, marks=pytest.mark.slow),
        pytest.param(0.01, 0.05, 2, 1e-10, marks=pytest.mark.slow),
    ])
    def test_step_matches_truncated_picard(self, gauss, eps, h, order, bound):
        solver = WKBSolver(SchemeConfig.from_step(h, order, eps), gauss)
        interval = (0.0, h)
        picard = np.eye(2) + eps * brute_force_M(1, interval, solver.phase)
        if order == 2:
            picard = picard + eps ** 2 * brute_force_M(2, interval, solver.phase)
        assert np.max(np.abs(solver.step_matrix(0) - picard)) <= bound
