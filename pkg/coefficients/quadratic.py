import numpy as np

from .base import BaseCoefficient, MAX_DERIVATIVE


class QuadraticCoefficient(BaseCoefficient):
    name = "quadratic"

    def __init__(self, shift: float = 0.5):
        self.shift = shift

    def derivatives(self, x, order: int = MAX_DERIVATIVE) -> np.ndarray:
        self._check_order(order)
        s = np.asarray(x, dtype=float) + self.shift
        rows = [s ** 2, 2.0 * s, np.full_like(s, 2.0)]
        rows += [np.zeros_like(s)] * 3
        return np.stack(rows[:order + 1])

    def phi1_exact(self, x):
        x = np.asarray(x, dtype=float)
        return x ** 2 / 2.0 + self.shift * x

    def phi2_exact(self, x):
        s = np.asarray(x, dtype=float) + self.shift
        return 3.0 / 16.0 * (s ** -2 - self.shift ** -2)
