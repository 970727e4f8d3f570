"""Phase function, beta chain and admissibility checks.

The phase is phi = phi1 - eps^2 phi2 with phi1 = int sqrt(a) and
phi2 = int beta. Three models provide it: a Chebyshev spectral one
(Clenshaw-Curtis antiderivatives, barycentric evaluation), a composite
Simpson one on the marching grid, and the closed form where the coefficient
has one.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.special import binom, factorial

from chebyshev import (ChebGrid, antiderivative_coeffs, barycentric_eval,
                       cheb_coeffs, cheb_nodes, diff_matrix)
from coefficients import BaseCoefficient, MAX_DERIVATIVE
from config import config


class PhaseMethod(Enum):
    SPECTRAL = "spectral"
    SIMPSON = "simpson"
    ANALYTIC = "analytic"


class BetaSource(Enum):
    SPECTRAL = "spectral"
    ANALYTIC = "analytic"


# --- truncated Taylor arithmetic -------------------------------------------
# A series is an array c of shape (K+1, M): c[k] = f^(k)(x) / k! at M points.

def _series_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    order = min(len(p), len(q)) - 1
    out = np.zeros((order + 1,) + p.shape[1:])
    for k in range(order + 1):
        for i in range(k + 1):
            out[k] += p[i] * q[k - i]
    return out


def _series_div(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    order = min(len(p), len(q)) - 1
    out = np.zeros((order + 1,) + p.shape[1:])
    for k in range(order + 1):
        acc = p[k].copy()
        for i in range(1, k + 1):
            acc -= q[i] * out[k - i]
        out[k] = acc / q[0]
    return out


def _series_deriv(p: np.ndarray) -> np.ndarray:
    k = np.arange(1, len(p)).reshape((-1,) + (1,) * (p.ndim - 1))
    return p[1:] * k


def _series_power(c: np.ndarray, power: float) -> np.ndarray:
    """Series of f^power from the series of a positive f."""
    order = len(c) - 1
    u = c / c[0]
    u[0] = 0.0
    out = np.zeros_like(c)
    out[0] = 1.0
    term = np.zeros_like(c)
    term[0] = 1.0
    for j in range(1, order + 1):
        term = _series_mul(term, u)
        out += binom(power, j) * term
    return out * c[0] ** power


def _coefficient_series(coeff: BaseCoefficient, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    derivs = coeff.derivatives(x, MAX_DERIVATIVE)
    if np.any(derivs[0] <= 0.0):
        raise ValueError(f"{coeff.name}: a(x) <= 0 inside the sample, not oscillatory")
    k = np.arange(MAX_DERIVATIVE + 1).reshape(-1, 1)
    return derivs / factorial(k)


def _beta_series(a_series: np.ndarray) -> np.ndarray:
    # beta = -w w'' / 2 with w = a^(-1/4)
    w = _series_power(a_series, -0.25)
    w2 = _series_deriv(_series_deriv(w))
    return -0.5 * _series_mul(w, w2)


@dataclass(frozen=True)
class BetaChain:
    beta: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    betas: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def beta(coeff: BaseCoefficient, x):
    values = _beta_series(_coefficient_series(coeff, x))[0]
    return float(values[0]) if np.ndim(x) == 0 else values


def beta_chain(coeff: BaseCoefficient, epsilon: float, x) -> BetaChain:
    """Analytic phi', phi'' and beta_0..beta_3 at x."""
    a_series = _coefficient_series(coeff, x)
    b = _beta_series(a_series)
    dphi = _series_power(a_series, 0.5)[:len(b)] - epsilon ** 2 * b
    if np.any(dphi[0] <= 0.0):
        raise ValueError("phi' = sqrt(a) - eps^2 beta must stay positive")
    chain = [_series_div(b, 2.0 * dphi)]
    for _ in range(3):
        prev = chain[-1]
        chain.append(_series_div(_series_deriv(prev), 2.0 * dphi[:len(prev) - 1]))
    return BetaChain(beta=b[0], dphi=dphi[0], d2phi=dphi[1],
                     betas=tuple(s[0] for s in chain))


# --- admissibility ----------------------------------------------------------

@dataclass(frozen=True)
class AdmissibilityReport:
    a0_min: float
    epsilon1: float
    epsilon: float
    admissible: bool
    reason: str = ""


def check_admissibility(coeff: BaseCoefficient, epsilon: float,
                        n_samples: Optional[int] = None) -> AdmissibilityReport:
    if n_samples is None:
        n_samples = config.ADMISSIBILITY_SAMPLES
    if n_samples < 32:
        raise ValueError("n_samples must be >= 32")
    x = cheb_nodes(n_samples - 1, *coeff.domain).mapped_nodes
    a = coeff.derivatives(x, 0)[0]
    a0 = float(np.min(a))
    if a0 <= 0.0:
        return AdmissibilityReport(a0, 0.0, epsilon, False,
                                   f"a(x) reaches {a0:.3g} <= 0 (turning point)")

    beta_plus = np.maximum(0.0, beta(coeff, x))
    with np.errstate(divide="ignore"):
        ratio = np.where(beta_plus > 0.0, a ** 0.25 / np.sqrt(beta_plus), np.inf)
    epsilon1 = float(min(1.0, np.min(ratio)))
    if not 0.0 < epsilon < epsilon1:
        return AdmissibilityReport(a0, epsilon1, epsilon, False,
                                   f"epsilon={epsilon:g} outside (0, {epsilon1:g})")
    return AdmissibilityReport(a0, epsilon1, epsilon, True)


def _require_admissible(coeff: BaseCoefficient, epsilon: float):
    report = check_admissibility(coeff, epsilon)
    if not report.admissible:
        raise ValueError(f"epsilon not admissible for {coeff.name}: {report.reason}")


# --- phase models ------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSamples:
    """Everything the marching matrices need at a run of grid nodes."""
    x: np.ndarray
    phi: np.ndarray
    beta: np.ndarray
    betas: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


class PhaseErrors(NamedTuple):
    value: float
    slope: float
    curvature: float


class PhaseModel(ABC):
    method: PhaseMethod

    def __init__(self, coeff: BaseCoefficient, epsilon: float):
        self.coeff = coeff
        self.epsilon = epsilon

    @abstractmethod
    def phi1(self, x): ...

    @abstractmethod
    def phi2(self, x): ...

    @abstractmethod
    def dphi(self, x): ...

    @abstractmethod
    def d2phi(self, x): ...

    @abstractmethod
    def beta(self, x): ...

    @abstractmethod
    def beta_k(self, k: int, x): ...

    @abstractmethod
    def samples(self, x: np.ndarray, phi_start: float = 0.0) -> PhaseSamples:
        """Phase data at consecutive grid nodes x; x[0] carries phi_start."""

    def phi(self, x):
        return self.phi1(x) - self.epsilon ** 2 * self.phi2(x)

    def sample_points(self, n: int) -> np.ndarray:
        return np.linspace(0.0, 1.0, n)

    def grid_phase(self, x: np.ndarray, phi_start: float = 0.0) -> np.ndarray:
        return self.samples(x, phi_start).phi

    def increments(self, x: np.ndarray) -> np.ndarray:
        return np.diff(self.grid_phase(x))

    def _default_samples(self, n: Optional[int]) -> np.ndarray:
        return self.sample_points(config.ACCURACY_SAMPLES if n is None else n)

    def min_slope(self, n: Optional[int] = None) -> float:
        return float(np.min(self.dphi(self._default_samples(n))))

    def beta_sup(self, n: Optional[int] = None) -> float:
        return float(np.max(np.abs(self.beta(self._default_samples(n)))))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.coeff.name}, eps={self.epsilon:g})"


class SpectralPhase(PhaseModel):
    method = PhaseMethod.SPECTRAL

    def __init__(self, coeff: BaseCoefficient, epsilon: float, n_cheb: int,
                 beta_source: BetaSource = BetaSource.SPECTRAL):
        super().__init__(coeff, epsilon)
        self.n_cheb = n_cheb
        self.beta_source = beta_source
        self.grid: ChebGrid = cheb_nodes(n_cheb, *coeff.domain)
        xs = self.grid.mapped_nodes

        sqrt_a = np.sqrt(coeff.derivatives(xs, 0)[0])
        chain = beta_chain(coeff, epsilon, xs)
        self.phi1_nodes = self._antiderivative_nodes(sqrt_a)
        self.phi2_nodes = self._antiderivative_nodes(chain.beta)

        if beta_source == BetaSource.SPECTRAL:
            d = diff_matrix(n_cheb, *coeff.domain)
            self.dphi_nodes = sqrt_a - epsilon ** 2 * chain.beta
            self.d2phi_nodes = d @ self.dphi_nodes
            self.beta_nodes = chain.beta
            betas = [chain.beta / (2.0 * self.dphi_nodes)]
            for _ in range(3):
                betas.append(d @ betas[-1] / (2.0 * self.dphi_nodes))
            self.betas_nodes = tuple(betas)
        else:
            self.dphi_nodes = chain.dphi
            self.d2phi_nodes = chain.d2phi
            self.beta_nodes = chain.beta
            self.betas_nodes = chain.betas

        if np.any(self.dphi_nodes <= 0.0):
            raise ValueError("spectral phase is not monotone (phi' <= 0 at a node)")

    def _antiderivative_nodes(self, samples: np.ndarray) -> np.ndarray:
        series = antiderivative_coeffs(cheb_coeffs(samples, *self.coeff.domain))
        values = npcheb.chebval(self.grid.nodes, series.coeffs)
        # the last node is the left endpoint; pin it to exactly zero
        return values - values[-1]

    def _eval(self, values, x):
        return barycentric_eval(values, self.grid, x)

    def phi1(self, x):
        return self._eval(self.phi1_nodes, x)

    def phi2(self, x):
        return self._eval(self.phi2_nodes, x)

    def dphi(self, x):
        return self._eval(self.dphi_nodes, x)

    def d2phi(self, x):
        return self._eval(self.d2phi_nodes, x)

    def beta(self, x):
        return self._eval(self.beta_nodes, x)

    def beta_k(self, k: int, x):
        return self._eval(self.betas_nodes[k], x)

    def samples(self, x, phi_start: float = 0.0) -> PhaseSamples:
        x = np.asarray(x, dtype=float)
        return PhaseSamples(
            x=x,
            phi=self.phi(x),
            beta=self.beta(x),
            betas=tuple(self.beta_k(k, x) for k in range(4))
        )


class AnalyticPhase(PhaseModel):
    method = PhaseMethod.ANALYTIC

    def phi1(self, x):
        return self.coeff.phi1_exact(x)

    def phi2(self, x):
        return self.coeff.phi2_exact(x)

    def _chain_value(self, x, pick):
        values = pick(beta_chain(self.coeff, self.epsilon, x))
        return float(values[0]) if np.ndim(x) == 0 else values

    def dphi(self, x):
        return self._chain_value(x, lambda c: c.dphi)

    def d2phi(self, x):
        return self._chain_value(x, lambda c: c.d2phi)

    def beta(self, x):
        return self._chain_value(x, lambda c: c.beta)

    def beta_k(self, k: int, x):
        return self._chain_value(x, lambda c: c.betas[k])

    def samples(self, x, phi_start: float = 0.0) -> PhaseSamples:
        x = np.asarray(x, dtype=float)
        chain = beta_chain(self.coeff, self.epsilon, x)
        return PhaseSamples(x=x, phi=self.phi(x), beta=chain.beta, betas=chain.betas)


class SimpsonPhase(AnalyticPhase):
    """Simpson phase values on a grid; derivatives and betas stay analytic."""

    method = PhaseMethod.SIMPSON

    def __init__(self, coeff: BaseCoefficient, epsilon: float,
                 grid: Optional[np.ndarray] = None):
        super().__init__(coeff, epsilon)
        self.grid = None
        if grid is not None:
            self.grid = np.asarray(grid, dtype=float)
            s1, s2 = self._cell_integrals(self.grid)
            self.phi1_grid = np.concatenate([[0.0], np.cumsum(s1)])
            self.phi2_grid = np.concatenate([[0.0], np.cumsum(s2)])

    def _cell_integrals(self, x: np.ndarray):
        mid = 0.5 * (x[:-1] + x[1:])
        dx = np.diff(x)
        sqrt_a = np.sqrt(self.coeff.derivatives(x, 0)[0])
        sqrt_a_mid = np.sqrt(self.coeff.derivatives(mid, 0)[0])
        b, b_mid = beta(self.coeff, x), beta(self.coeff, mid)
        s1 = dx / 6.0 * (sqrt_a[:-1] + 4.0 * sqrt_a_mid + sqrt_a[1:])
        s2 = dx / 6.0 * (b[:-1] + 4.0 * b_mid + b[1:])
        return s1, s2

    def _lookup(self, x) -> np.ndarray:
        if self.grid is None:
            raise ValueError("Simpson phase has no stored grid")
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.grid, xs), 0, len(self.grid) - 1)
        if not np.array_equal(self.grid[idx], xs):
            raise ValueError("Simpson phase is only defined on its grid nodes")
        return idx

    def phi1(self, x):
        values = self.phi1_grid[self._lookup(x)]
        return float(values[0]) if np.ndim(x) == 0 else values

    def phi2(self, x):
        values = self.phi2_grid[self._lookup(x)]
        return float(values[0]) if np.ndim(x) == 0 else values

    @property
    def grid_phi(self) -> np.ndarray:
        return self.phi1_grid - self.epsilon ** 2 * self.phi2_grid

    def sample_points(self, n: int) -> np.ndarray:
        if self.grid is None:
            return super().sample_points(n)
        return self.grid

    def increments(self, x: np.ndarray) -> np.ndarray:
        s1, s2 = self._cell_integrals(np.asarray(x, dtype=float))
        return s1 - self.epsilon ** 2 * s2

    def samples(self, x, phi_start: float = 0.0) -> PhaseSamples:
        x = np.asarray(x, dtype=float)
        chain = beta_chain(self.coeff, self.epsilon, x)
        phi = phi_start + np.concatenate([[0.0], np.cumsum(self.increments(x))])
        return PhaseSamples(x=x, phi=phi, beta=chain.beta, betas=chain.betas)


# --- builders ----------------------------------------------------------------

def build_phase_spectral(coeff: BaseCoefficient, epsilon: float,
                         n_cheb: Optional[int] = None,
                         beta_source: BetaSource = BetaSource.SPECTRAL) -> SpectralPhase:
    if n_cheb is None:
        n_cheb = config.CHEB_N
    if n_cheb < 8:
        raise ValueError("n_cheb must be >= 8")
    _require_admissible(coeff, epsilon)
    return SpectralPhase(coeff, epsilon, n_cheb, BetaSource(beta_source))


def build_phase_simpson(coeff: BaseCoefficient, epsilon: float, grid) -> SimpsonPhase:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("Simpson phase needs at least 2 grid nodes")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be strictly increasing")
    _require_admissible(coeff, epsilon)
    return SimpsonPhase(coeff, epsilon, grid)


def build_phase_analytic(coeff: BaseCoefficient, epsilon: float) -> AnalyticPhase:
    _require_admissible(coeff, epsilon)
    model = AnalyticPhase(coeff, epsilon)
    model.phi1(0.0)  # fails early for coefficients without a closed form
    return model


def build_phase(coeff: BaseCoefficient, epsilon: float, method,
                n_cheb: Optional[int] = None, grid=None,
                beta_source: BetaSource = BetaSource.SPECTRAL) -> PhaseModel:
    method = PhaseMethod(method)
    if method == PhaseMethod.SPECTRAL:
        return build_phase_spectral(coeff, epsilon, n_cheb, beta_source)
    if method == PhaseMethod.ANALYTIC:
        return build_phase_analytic(coeff, epsilon)
    if grid is None:
        # marching grid is supplied block by block through samples()
        _require_admissible(coeff, epsilon)
        return SimpsonPhase(coeff, epsilon)
    return build_phase_simpson(coeff, epsilon, grid)


def phase_accuracy(model: PhaseModel, reference: PhaseModel,
                   n_samples: Optional[int] = None) -> PhaseErrors:
    if n_samples is None:
        n_samples = config.ACCURACY_SAMPLES
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    x = model.sample_points(n_samples)
    return PhaseErrors(
        value=float(np.max(np.abs(model.phi(x) - reference.phi(x)))),
        slope=float(np.max(np.abs(model.dphi(x) - reference.dphi(x)))),
        curvature=float(np.max(np.abs(model.d2phi(x) - reference.d2phi(x))))
    )
