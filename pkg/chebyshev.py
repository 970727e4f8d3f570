"""Chebyshev spectral toolkit.

Collocation on the points of the second kind, coefficient transforms,
Clenshaw-Curtis antiderivatives, differentiation matrices and barycentric
interpolation. Series live on a single interval [lo, hi] mapped affinely
onto [-1, 1].
"""

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.fft import dct

ArrayLike = Union[float, np.ndarray]

# relative slack for points that land just outside the interval by round-off
DOMAIN_TOL = 1e-12


class MapDirection(Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True)
class ChebGrid:
    n_poly: int
    nodes: np.ndarray
    mapped_nodes: np.ndarray
    interval_lo: float = -1.0
    interval_hi: float = 1.0

    @property
    def size(self) -> int:
        return self.n_poly + 1


@dataclass(frozen=True)
class ChebyshevSeries:
    interval_lo: float
    interval_hi: float
    coeffs: np.ndarray

    def __post_init__(self):
        if not self.interval_lo < self.interval_hi:
            raise ValueError("Require interval_lo < interval_hi")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return cheb_eval(self, x)


def map_interval(x: ArrayLike, lo: float, hi: float,
                 direction: MapDirection = MapDirection.FORWARD) -> ArrayLike:
    if not lo < hi:
        raise ValueError("Require lo < hi")
    if direction == MapDirection.FORWARD:
        return (2.0 * np.asarray(x, dtype=float) - lo - hi) / (hi - lo)
    l = np.asarray(x, dtype=float)
    return hi * (1.0 + l) / 2.0 + lo * (1.0 - l) / 2.0


def cheb_nodes(n: int, lo: float = -1.0, hi: float = 1.0) -> ChebGrid:
    if n < 1:
        raise ValueError("n must be >= 1")
    j = np.arange(n + 1)
    # sine form of cos(j*pi/n): exact zero at the centre and exact symmetry
    nodes = np.sin(np.pi * (n - 2 * j) / (2 * n))
    mapped = map_interval(nodes, lo, hi, MapDirection.INVERSE)
    return ChebGrid(n_poly=n, nodes=nodes, mapped_nodes=mapped,
                    interval_lo=lo, interval_hi=hi)


def cheb_coeffs(samples, lo: float = -1.0, hi: float = 1.0) -> ChebyshevSeries:
    """Coefficients a_n with sum_n a_n cos(n j pi / N) = samples[j].

    Samples are ordered like ``cheb_nodes`` (from l = 1 down to l = -1).
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise ValueError("samples must hold N+1 >= 2 values")
    n = len(values) - 1
    coeffs = dct(values, type=1) / n
    coeffs[0] /= 2.0
    coeffs[n] /= 2.0
    return ChebyshevSeries(lo, hi, coeffs)


def _to_reference(series: ChebyshevSeries, x: ArrayLike) -> np.ndarray:
    lo, hi = series.interval_lo, series.interval_hi
    l = map_interval(x, lo, hi, MapDirection.FORWARD)
    if np.any(np.abs(l) > 1.0 + DOMAIN_TOL):
        raise ValueError(f"x outside [{lo}, {hi}]")
    return np.clip(l, -1.0, 1.0)


def cheb_eval(series: ChebyshevSeries, x: ArrayLike) -> ArrayLike:
    l = _to_reference(series, x)
    values = npcheb.chebval(l, series.coeffs)
    return float(values) if np.ndim(values) == 0 else values


def antiderivative_coeffs(series: ChebyshevSeries) -> ChebyshevSeries:
    """Clenshaw-Curtis antiderivative, vanishing at the left endpoint.

    Uses b_n = (a_{n-1} - a_{n+1}) / (2n) and b_N = a_{N-1} / (2N); the
    expansion is kept at degree N.
    """
    a = np.asarray(series.coeffs, dtype=float)
    n = len(a) - 1
    if n < 2:
        raise ValueError("antiderivative needs at least 3 coefficients")
    b = np.zeros(n + 1)
    b[1] = a[0] - a[2] / 2.0
    k = np.arange(2, n)
    b[2:n] = (a[1:n - 1] - a[3:n + 1]) / (2.0 * k)
    b[n] = a[n - 1] / (2.0 * n)
    signs = (-1.0) ** np.arange(1, n + 1)
    b[0] = -np.sum(signs * b[1:])
    jacobian = (series.interval_hi - series.interval_lo) / 2.0
    return ChebyshevSeries(series.interval_lo, series.interval_hi, b * jacobian)


def diff_matrix(n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Collocation differentiation matrix on ``cheb_nodes(n, lo, hi)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = cheb_nodes(n).nodes
    c = np.ones(n + 1)
    c[0] = c[n] = 2.0
    c = c * (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    # negative sum trick
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d * (2.0 / (hi - lo))


def barycentric_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[n] *= 0.5
    return w


def barycentric_eval(node_values, grid: ChebGrid, x: ArrayLike) -> ArrayLike:
    values = np.asarray(node_values, dtype=float)
    if len(values) != grid.size:
        raise ValueError("node_values length does not match the grid")
    lo, hi = grid.interval_lo, grid.interval_hi
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    slack = DOMAIN_TOL * (hi - lo)
    if np.any(xs < lo - slack) or np.any(xs > hi + slack):
        raise ValueError(f"x outside [{lo}, {hi}]")

    weights = barycentric_weights(grid.n_poly)
    numer = np.zeros_like(xs)
    denom = np.zeros_like(xs)
    exact = np.full(xs.shape, -1, dtype=int)
    # loop over the (few) nodes so memory stays O(len(x))
    for j, node in enumerate(grid.mapped_nodes):
        diff = xs - node
        hit = diff == 0.0
        exact[hit] = j
        diff[hit] = 1.0
        term = weights[j] / diff
        numer += term * values[j]
        denom += term
    with np.errstate(invalid="ignore", divide="ignore"):
        result = numer / denom
    hits = exact >= 0
    result[hits] = values[exact[hits]]
    return float(result[0]) if np.ndim(x) == 0 else result
