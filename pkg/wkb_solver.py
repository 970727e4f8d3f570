"""WKB marching schemes for eps^2 phi'' + a(x) phi = 0 on [0, 1].

The wavefunction is packed into U = (a^1/4 phi, eps (a^1/4 phi)' / sqrt(a)),
rotated into the slowly varying Z = exp(-i Phi / eps) P U and marched with
the first order update (I + A1) or the second order update (I + A2 + A3).
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import factorial

from coefficients import BaseCoefficient
from config import config
from phase_model import (BetaSource, PhaseMethod, PhaseModel, PhaseSamples,
                         build_phase)

SQRT_HALF = 1.0 / np.sqrt(2.0)
P = SQRT_HALF * np.array([[1j, 1.0], [1.0, 1j]])
P_INV = SQRT_HALF * np.array([[-1j, 1.0], [1.0, -1j]])

# below this |x| the H kernels switch to their Taylor series
KERNEL_SERIES_CUTOFF = 1e-2
KERNEL_SERIES_TERMS = 8


@dataclass(frozen=True)
class InitialData:
    phi0: complex = 1.0
    phi1: complex = -1j  # eps * phi'(0)


@dataclass(frozen=True)
class StateZ:
    z1: complex
    z2: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2], dtype=complex)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


@dataclass(frozen=True)
class StateU:
    u1: complex
    u2: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2], dtype=complex)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


@dataclass(frozen=True)
class SchemeConfig:
    order: int
    epsilon: float
    n_grid: int
    phase_method: PhaseMethod = PhaseMethod.SPECTRAL
    n_cheb: Optional[int] = None
    beta_source: BetaSource = BetaSource.SPECTRAL

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.n_grid < 2:
            raise ValueError("grid needs at least 2 nodes")
        object.__setattr__(self, "phase_method", PhaseMethod(self.phase_method))
        object.__setattr__(self, "beta_source", BetaSource(self.beta_source))

    @classmethod
    def from_step(cls, h: float, order: int, epsilon: float,
                  phase_method=PhaseMethod.SPECTRAL, **kwargs) -> "SchemeConfig":
        if not 0.0 < h <= 1.0:
            raise ValueError(f"h={h} must lie in (0, 1]")
        intervals = int(round(1.0 / h))
        if abs(1.0 / intervals - h) > 1e-12 * h:
            raise ValueError(f"h={h} is not 1/(N-1) for an integer N")
        return cls(order, epsilon, intervals + 1, phase_method, **kwargs)

    @property
    def intervals(self) -> int:
        return self.n_grid - 1

    @property
    def h(self) -> float:
        return 1.0 / self.intervals

    def nodes(self, idx) -> np.ndarray:
        return np.asarray(idx, dtype=float) / self.intervals

    @property
    def grid(self) -> np.ndarray:
        return self.nodes(np.arange(self.n_grid))


@dataclass
class Trajectory:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    phi_tilde: np.ndarray
    phi: np.ndarray = field(default=None)
    eps_dphi: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.x)
        if self.z.shape != (n, 2) or self.u.shape != (n, 2) or len(self.phi_tilde) != n:
            raise ValueError("trajectory arrays must match the stored nodes")

    def __len__(self) -> int:
        return len(self.x)

    def norms(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.linalg.norm(self.u, axis=1), np.linalg.norm(self.z, axis=1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "x": self.x,
            "re_u1": self.u[:, 0].real, "im_u1": self.u[:, 0].imag,
            "re_u2": self.u[:, 1].real, "im_u2": self.u[:, 1].imag,
            "re_z1": self.z[:, 0].real, "im_z1": self.z[:, 0].imag,
            "re_z2": self.z[:, 1].real, "im_z2": self.z[:, 1].imag,
            "phi_tilde": self.phi_tilde
        })


# --- transforms ----------------------------------------------------------------

def _quarter_power(coeff: BaseCoefficient, x):
    a, da = coeff.derivatives(x, 1)
    if np.any(a <= 0.0):
        raise ValueError(f"{coeff.name}: a(x) <= 0, U-transform undefined")
    q = a ** 0.25
    return a, q, da / (4.0 * a ** 0.75)


def wavefunction_to_U(phi, eps_dphi, coeff: BaseCoefficient, x, epsilon: float):
    """(phi, eps phi') at x packed into (u1, u2)."""
    a, q, dq = _quarter_power(coeff, x)
    return q * phi, (q * eps_dphi + epsilon * dq * phi) / np.sqrt(a)


def initial_U(data: InitialData, coeff: BaseCoefficient, epsilon: float) -> StateU:
    u1, u2 = wavefunction_to_U(data.phi0, data.phi1, coeff, 0.0, epsilon)
    return StateU(complex(u1), complex(u2))


def to_Z(U: StateU) -> StateZ:
    z = P @ U.as_array()
    return StateZ(complex(z[0]), complex(z[1]))


def _back_transform_arrays(z1, z2, phi_tilde, epsilon):
    y1 = np.exp(1j * phi_tilde / epsilon) * z1
    y2 = np.exp(-1j * phi_tilde / epsilon) * z2
    return SQRT_HALF * (-1j * y1 + y2), SQRT_HALF * (y1 - 1j * y2)


def back_transform(Z: StateZ, phi_tilde: float, epsilon: float) -> StateU:
    u1, u2 = _back_transform_arrays(Z.z1, Z.z2, phi_tilde, epsilon)
    return StateU(complex(u1), complex(u2))


def _recover_arrays(u1, u2, coeff, x, epsilon):
    a, q, dq = _quarter_power(coeff, x)
    return u1 / q, q * u2 - epsilon * dq * u1 / np.sqrt(a)


def recover_wavefunction(U: StateU, coeff: BaseCoefficient, x: float,
                         epsilon: float) -> Tuple[complex, complex]:
    """Return (phi(x), eps * phi'(x)) from U at x."""
    phi, eps_dphi = _recover_arrays(U.u1, U.u2, coeff, float(x), epsilon)
    return complex(phi), complex(eps_dphi)


# --- oscillatory kernels ---------------------------------------------------------

def _exp_tail(ix, first_term: int):
    """sum_{k >= first_term} (ix)^k / k!, truncated, by Horner."""
    total = np.zeros(ix.shape, dtype=complex)
    for k in range(KERNEL_SERIES_TERMS, first_term - 1, -1):
        total = total * ix + 1.0 / factorial(k)
    return total * ix ** first_term


def _kernel(x, first_term: int):
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.exp(1j * xs) - 1.0
    if first_term == 2:
        out = out - 1j * xs
    small = np.abs(xs) < KERNEL_SERIES_CUTOFF
    if np.any(small):
        out[small] = _exp_tail(1j * xs[small], first_term)
    return complex(out[0]) if np.ndim(x) == 0 else out


def h1_kernel(x):
    """H1(x) = exp(ix) - 1."""
    return _kernel(x, 1)


def h2_kernel(x):
    """H2(x) = exp(ix) - 1 - ix."""
    return _kernel(x, 2)


# --- marching matrices -------------------------------------------------------------

def _lower_entries(order: int, epsilon: float, s: PhaseSamples):
    """Entries (1,1) and (2,1) of A for every step between consecutive samples.

    The remaining entries follow as (1,2) = conj(2,1) and (2,2) = conj(1,1).
    """
    eps = epsilon
    x, b = s.x, s.beta
    b0, b1, b2, b3 = s.betas
    e = np.exp(2j * s.phi / eps)
    e_n, e_p = e[:-1], e[1:]
    arg = 2.0 * np.diff(s.phi) / eps

    h1p = h1_kernel(arg)
    jump0 = b0[1:] * e_p - b0[:-1] * e_n
    if order == 1:
        a21 = eps ** 3 * b1[1:] * e_n * h1p - 1j * eps ** 2 * jump0
        return np.zeros_like(a21), a21

    h1m = h1_kernel(-arg)
    h2p, h2m = h2_kernel(arg), h2_kernel(-arg)
    jump1 = b1[1:] * e_p - b1[:-1] * e_n
    a21 = (-1j * eps ** 2 * jump0
           + eps ** 3 * jump1
           + 1j * eps ** 4 * b2[1:] * e_n * h1p
           - eps ** 5 * b3[1:] * e_n * h2p)
    trapezoid = np.diff(x) * (b[1:] * b0[1:] + b[:-1] * b0[:-1]) / 2.0
    a11 = (-1j * eps ** 3 * trapezoid
           - eps ** 4 * b0[:-1] * b0[1:] * h1m
           + 1j * eps ** 5 * b1[1:] * (b0[:-1] - b0[1:]) * h2m)
    return a11, a21


def _full_matrix(a11, a21) -> np.ndarray:
    return np.array([[a11, np.conj(a21)], [a21, np.conj(a11)]], dtype=complex)


class WKBSolver:
    def __init__(self, scheme: SchemeConfig, coeff: BaseCoefficient,
                 phase: Optional[PhaseModel] = None):
        self.scheme = scheme
        self.coeff = coeff
        self.phase = phase or build_phase(
            coeff, scheme.epsilon, scheme.phase_method,
            n_cheb=scheme.n_cheb, beta_source=scheme.beta_source
        )

    @property
    def epsilon(self) -> float:
        return self.scheme.epsilon

    def _pair_samples(self, n: int) -> PhaseSamples:
        if not 0 <= n < self.scheme.intervals:
            raise ValueError(f"step index {n} outside 0..{self.scheme.intervals - 1}")
        if self.phase.method == PhaseMethod.SIMPSON:
            full = self.phase.samples(self.scheme.nodes(np.arange(n + 2)))
            return PhaseSamples(full.x[n:], full.phi[n:], full.beta[n:],
                                tuple(b[n:] for b in full.betas))
        return self.phase.samples(self.scheme.nodes([n, n + 1]))

    def _assemble(self, order: int, n: int, part: str) -> np.ndarray:
        a11, a21 = _lower_entries(order, self.epsilon, self._pair_samples(n))
        if part == "diagonal":
            a21 = np.zeros_like(a21)
        elif part == "off_diagonal":
            a11 = np.zeros_like(a11)
        return _full_matrix(a11[0], a21[0])

    def assemble_a1(self, n: int) -> np.ndarray:
        return self._assemble(1, n, "all")

    def assemble_a2(self, n: int) -> np.ndarray:
        return self._assemble(2, n, "off_diagonal")

    def assemble_a3(self, n: int) -> np.ndarray:
        return self._assemble(2, n, "diagonal")

    def step_matrix(self, n: int) -> np.ndarray:
        if self.scheme.order == 1:
            return np.eye(2) + self.assemble_a1(n)
        return np.eye(2) + self.assemble_a2(n) + self.assemble_a3(n)

    def step(self, Z: StateZ, n: int) -> StateZ:
        z = self.step_matrix(n) @ Z.as_array()
        return StateZ(complex(z[0]), complex(z[1]))

    def solve(self, data: InitialData, stride: int = 1,
              chunk_size: Optional[int] = None) -> Trajectory:
        scheme = self.scheme
        steps = scheme.intervals
        if stride < 1 or steps % stride:
            raise ValueError(f"stride {stride} must divide the {steps} grid intervals")
        if chunk_size is None:
            chunk_size = config.CHUNK_SIZE
        if chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

        z0 = to_Z(initial_U(data, self.coeff, self.epsilon))
        z1, z2 = z0.z1, z0.z2
        stored_z = [(z1, z2)]
        stored_phi = [0.0]
        phi_start = 0.0

        for start in range(0, steps, chunk_size):
            stop = min(start + chunk_size, steps)
            samples = self.phase.samples(scheme.nodes(np.arange(start, stop + 1)), phi_start)
            a11, a21 = _lower_entries(scheme.order, self.epsilon, samples)
            m11 = (1.0 + a11).tolist()
            m12 = np.conj(a21).tolist()
            m21 = a21.tolist()
            m22 = (1.0 + np.conj(a11)).tolist()
            phi = samples.phi.tolist()
            for k in range(stop - start):
                z1, z2 = m11[k] * z1 + m12[k] * z2, m21[k] * z1 + m22[k] * z2
                if (start + k + 1) % stride == 0:
                    stored_z.append((z1, z2))
                    stored_phi.append(phi[k + 1])
            phi_start = phi[-1]

        x = scheme.nodes(np.arange(0, steps + 1, stride))
        z = np.array(stored_z, dtype=complex)
        phi_tilde = np.array(stored_phi)
        u1, u2 = _back_transform_arrays(z[:, 0], z[:, 1], phi_tilde, self.epsilon)
        wave, eps_dphi = _recover_arrays(u1, u2, self.coeff, x, self.epsilon)
        return Trajectory(x=x, z=z, u=np.column_stack([u1, u2]),
                          phi_tilde=phi_tilde, phi=wave, eps_dphi=eps_dphi)


def solve(scheme: SchemeConfig, coeff: BaseCoefficient, data: InitialData,
          stride: int = 1, phase: Optional[PhaseModel] = None) -> Trajectory:
    return WKBSolver(scheme, coeff, phase).solve(data, stride)
