"""Exception hierarchy shared across the package."""


class StefanFrontError(Exception):
    """Base class for all package errors."""


class DomainError(StefanFrontError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(StefanFrontError):
    """A requested value lies outside the attainable range of a function."""


class GridError(StefanFrontError):
    """A spatial grid violates a structural requirement."""


class ParameterError(StefanFrontError):
    """Inconsistent or out-of-range model parameters."""


class TimeOrderError(StefanFrontError):
    """Evaluation or observation times are not properly ordered."""


class CoverageError(StefanFrontError):
    """A front history does not cover the requested time."""


class StepError(StefanFrontError):
    """A time step failed to converge; carries the residual and time."""

    def __init__(self, message, t=None, residual=None):
        super().__init__(message)
        self.t = t
        self.residual = residual


class DegenerateSetError(StefanFrontError):
    """A tangent set lost numerical rank."""


class InsufficientSamplingError(StefanFrontError):
    """A growth-rate observation window is too short to average over."""


class ConfigError(StefanFrontError):
    """A run configuration is malformed or incomplete."""
