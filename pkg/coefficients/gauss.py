import numpy as np
from numpy.polynomial.hermite import Hermite
from scipy.special import erf, erfi

from .base import BaseCoefficient, MAX_DERIVATIVE


class GaussCoefficient(BaseCoefficient):
    """a(x) = exp(-x^2); a^(k) = (-1)^k H_k(x) exp(-x^2) with physicists' H_k."""

    name = "gauss"

    def derivatives(self, x, order: int = MAX_DERIVATIVE) -> np.ndarray:
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        a = np.exp(-x ** 2)
        return np.stack([(-1.0) ** k * Hermite.basis(k)(x) * a
                         for k in range(order + 1)])

    def phi1_exact(self, x):
        return np.sqrt(np.pi / 2.0) * erf(np.asarray(x, dtype=float) / np.sqrt(2.0))

    def phi2_exact(self, x):
        x = np.asarray(x, dtype=float)
        return -(x * np.exp(x ** 2 / 2.0)
                 + np.sqrt(np.pi / 2.0) * erfi(x / np.sqrt(2.0))) / 8.0
