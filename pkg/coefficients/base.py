from abc import ABC, abstractmethod
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

MAX_DERIVATIVE = 5


class BaseCoefficient(ABC):
    """Smooth coefficient a(x) on [0, 1] with analytic derivatives."""

    name: str = "base"
    domain = (0.0, 1.0)

    @abstractmethod
    def derivatives(self, x: ArrayLike, order: int = MAX_DERIVATIVE) -> np.ndarray:
        """Stack of a^(k)(x) for k = 0..order along axis 0."""

    def __call__(self, x: ArrayLike) -> ArrayLike:
        values = self.derivatives(x, 0)[0]
        return float(values) if np.ndim(x) == 0 else values

    def phi1_exact(self, x: ArrayLike) -> ArrayLike:
        raise NotImplementedError(f"{self.name}: no closed form for int sqrt(a)")

    def phi2_exact(self, x: ArrayLike) -> ArrayLike:
        raise NotImplementedError(f"{self.name}: no closed form for int beta")

    def _check_order(self, order: int):
        if not 0 <= order <= MAX_DERIVATIVE:
            raise ValueError(f"derivative order must be in 0..{MAX_DERIVATIVE}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"
