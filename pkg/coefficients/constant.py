import numpy as np

from .base import BaseCoefficient, MAX_DERIVATIVE


class ConstantCoefficient(BaseCoefficient):
    name = "constant"

    def derivatives(self, x, order: int = MAX_DERIVATIVE) -> np.ndarray:
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        rows = [np.ones_like(x)] + [np.zeros_like(x)] * order
        return np.stack(rows)

    def phi1_exact(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def phi2_exact(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))
