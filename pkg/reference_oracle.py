"""Ground truth for the marching schemes.

Four independent sources: an adaptive Runge-Kutta solve of the oscillatory
equation itself, the same WKB scheme on a refined grid, the closed-form
solution for a constant coefficient, and brute-force quadrature of the
Picard matrices M1, M2 of a single step.
"""

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp

from coefficients import BaseCoefficient
from config import config
from phase_model import PhaseModel
from wkb_solver import (InitialData, P, SchemeConfig, Trajectory, WKBSolver,
                        wavefunction_to_U)

RK_MIN_EPSILON = 1e-3
M1_TOL = 1e-12
M2_OUTER_TOL = 1e-10
QUAD_LIMIT = 200


class OracleMethod(Enum):
    RK = "rk"
    SELF = "self"
    ANALYTIC = "analytic"


@dataclass
class OracleSolution:
    x: np.ndarray
    u: np.ndarray
    method: OracleMethod
    estimated_accuracy: float
    z: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.x)


def rk_reference(coeff: BaseCoefficient, data: InitialData, epsilon: float,
                 tol: Optional[float] = None, nodes=None) -> OracleSolution:
    """DOP853 on (phi, psi = eps phi'): phi' = psi / eps, psi' = -a phi / eps."""
    if tol is None:
        tol = config.RK_TOL
    if epsilon < RK_MIN_EPSILON:
        raise ValueError(f"RK oracle needs epsilon >= {RK_MIN_EPSILON:g}")
    if tol < 1e-13:
        raise ValueError("RK tolerance must be >= 1e-13")
    nodes = np.linspace(0.0, 1.0, 11) if nodes is None else np.asarray(nodes, dtype=float)
    if nodes[0] < 0.0 or np.any(np.diff(nodes) <= 0.0):
        raise ValueError("nodes must be increasing and start at x >= 0")

    def rhs(x, y):
        return np.array([y[1] / epsilon, -coeff(x) * y[0] / epsilon])

    y0 = np.array([data.phi0, data.phi1], dtype=complex)
    result = solve_ivp(rhs, (0.0, float(nodes[-1])), y0, method="DOP853",
                       t_eval=nodes, rtol=tol, atol=tol)
    if not result.success:
        raise RuntimeError(f"RK oracle failed: {result.message}")

    u1, u2 = wavefunction_to_U(result.y[0], result.y[1], coeff, nodes, epsilon)
    return OracleSolution(nodes, np.column_stack([u1, u2]), OracleMethod.RK, tol * 10.0)


def _run(scheme: SchemeConfig, coeff, data, refine: int, phase) -> Trajectory:
    fine = SchemeConfig(scheme.order, scheme.epsilon, scheme.intervals * refine + 1,
                        scheme.phase_method, scheme.n_cheb, scheme.beta_source)
    return WKBSolver(fine, coeff, phase).solve(data, stride=refine)


def self_reference(scheme: SchemeConfig, coeff: BaseCoefficient, data: InitialData,
                   refine: Optional[int] = None, phase: Optional[PhaseModel] = None,
                   estimate: bool = True) -> OracleSolution:
    """Same scheme on h / refine, read off at the coarse nodes.

    With ``estimate`` the run at refine / 2 gives a Richardson-style accuracy
    estimate |U_ref - U_half| / (2^order - 1).
    """
    if refine is None:
        refine = config.REFINE
    if refine < 1:
        raise ValueError("refine must be >= 1")
    if phase is None:
        # one phase model for both runs; the spectral one does not depend on h
        phase = WKBSolver(scheme, coeff).phase
    ref = _run(scheme, coeff, data, refine, phase)

    accuracy = np.nan
    if estimate and refine >= 2 and refine % 2 == 0:
        half = _run(scheme, coeff, data, refine // 2, phase)
        diff = np.max(np.linalg.norm(ref.u - half.u, axis=1))
        accuracy = float(diff / (2 ** scheme.order - 1))
    return OracleSolution(ref.x, ref.u, OracleMethod.SELF, accuracy, z=ref.z)


def analytic_constant(data: InitialData, epsilon: float, x) -> Tuple[np.ndarray, np.ndarray]:
    """Solution of eps^2 phi'' + phi = 0 as (phi, eps phi')."""
    t = np.asarray(x, dtype=float) / epsilon
    phi = data.phi0 * np.cos(t) + data.phi1 * np.sin(t)
    eps_dphi = -data.phi0 * np.sin(t) + data.phi1 * np.cos(t)
    return phi, eps_dphi


def analytic_reference(coeff: BaseCoefficient, data: InitialData, epsilon: float,
                       nodes) -> OracleSolution:
    if coeff.name != "constant":
        raise ValueError(f"no closed-form solution for coefficient {coeff.name!r}")
    nodes = np.asarray(nodes, dtype=float)
    phi, eps_dphi = analytic_constant(data, epsilon, nodes)
    u1, u2 = wavefunction_to_U(phi, eps_dphi, coeff, nodes, epsilon)
    phase = np.exp(-1j * nodes / epsilon)
    z = np.column_stack([phase, 1.0 / phase]) * (np.column_stack([u1, u2]) @ P.T)
    return OracleSolution(nodes, np.column_stack([u1, u2]), OracleMethod.ANALYTIC,
                          0.0, z=z)


# --- Picard matrices ----------------------------------------------------------------

def _complex_quad(func, lo: float, hi: float, epsabs: float) -> complex:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            re, _ = quad(lambda y: func(y).real, lo, hi, epsabs=epsabs,
                         epsrel=epsabs, limit=QUAD_LIMIT)
            im, _ = quad(lambda y: func(y).imag, lo, hi, epsabs=epsabs,
                         epsrel=epsabs, limit=QUAD_LIMIT)
        except IntegrationWarning as exc:
            raise RuntimeError(f"quadrature did not converge on [{lo}, {hi}]: {exc}") from exc
    return complex(re, im)


def brute_force_M(p: int, interval: Tuple[float, float], phase: PhaseModel) -> np.ndarray:
    """Picard matrix M_p over one step, with B = beta [[0, e^-], [e^+, 0]]."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    lo, hi = (float(v) for v in interval)
    if not lo < hi:
        raise ValueError("interval must satisfy x_n < x_n+1")
    eps = phase.epsilon

    def b21(y):
        return phase.beta(y) * np.exp(2j * phase.phi(y) / eps)

    def b12(y):
        return phase.beta(y) * np.exp(-2j * phase.phi(y) / eps)

    if p == 1:
        m21 = _complex_quad(b21, lo, hi, M1_TOL)
        m12 = _complex_quad(b12, lo, hi, M1_TOL)
        return np.array([[0.0, m12], [m21, 0.0]], dtype=complex)

    inner_tol = M1_TOL
    m11 = _complex_quad(lambda y: b12(y) * _complex_quad(b21, lo, y, inner_tol),
                        lo, hi, M2_OUTER_TOL)
    m22 = _complex_quad(lambda y: b21(y) * _complex_quad(b12, lo, y, inner_tol),
                        lo, hi, M2_OUTER_TOL)
    return np.array([[m11, 0.0], [0.0, m22]], dtype=complex)
