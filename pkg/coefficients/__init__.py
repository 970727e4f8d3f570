from .base import BaseCoefficient, MAX_DERIVATIVE
from .gauss import GaussCoefficient
from .quadratic import QuadraticCoefficient
from .constant import ConstantCoefficient

ALL_COEFFICIENTS = [
    GaussCoefficient,
    QuadraticCoefficient,
    ConstantCoefficient
]

COEFFICIENT_NAMES = [c.name for c in ALL_COEFFICIENTS]


def builtin_coefficient(name: str) -> BaseCoefficient:
    for cls in ALL_COEFFICIENTS:
        if cls.name == name:
            return cls()
    raise KeyError(f"unknown coefficient {name!r}; choose from {', '.join(COEFFICIENT_NAMES)}")


__all__ = [
    "BaseCoefficient",
    "MAX_DERIVATIVE",
    "ALL_COEFFICIENTS",
    "COEFFICIENT_NAMES",
    "builtin_coefficient",
    "GaussCoefficient",
    "QuadraticCoefficient",
    "ConstantCoefficient"
]
