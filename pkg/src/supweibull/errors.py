"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain where a formula or sampler is valid."""


class ConvergenceError(ArithmeticError):
    """Numerical routine stopped before reaching its tolerance.

    ``best_estimate`` carries whatever the routine had when it gave up.
    """

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class SimulationError(RuntimeError):
    """Gaussian sampling failed (covariance not numerically positive semidefinite)."""


class InsufficientDataError(ValueError):
    """Too few informative Monte Carlo points for a regression."""
