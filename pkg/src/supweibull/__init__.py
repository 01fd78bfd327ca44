"""Weibullian tail asymptotics for suprema of Gaussian processes over random horizons."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, InsufficientDataError, SimulationError  # noqa: E402
from .tail_algebra import WeibullTailClass, normal_tail_class, power, product, scale  # noqa: E402

__all__ = [
    "__version__",
    "ConvergenceError",
    "DomainError",
    "InsufficientDataError",
    "SimulationError",
    "WeibullTailClass",
    "normal_tail_class",
    "power",
    "product",
    "scale",
]
