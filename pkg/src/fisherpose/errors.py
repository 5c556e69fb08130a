"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An input violates a documented precondition."""


class OutOfRangeError(ValueError):
    """An input lies outside the numerically supported range."""


class ConvergenceError(RuntimeError):
    """An iterative routine stopped before reaching its tolerance.

    ``error_estimate`` carries the last achieved error estimate.
    """

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class DegenerateConfigurationError(ValueError):
    """Geometry is too degenerate for the requested fit."""


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined (constant input)."""


class SamplerError(RuntimeError):
    """Rejection sampler exceeded its iteration cap."""
