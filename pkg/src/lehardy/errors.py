"""Exception hierarchy shared by all modules."""


class LEHardyError(Exception):
    """Base class for every error raised by the package."""


class EmptyDomain(LEHardyError):
    pass


class SpacingTooCoarse(LEHardyError):
    pass


class DomainMismatch(LEHardyError):
    pass


class GridMismatch(LEHardyError):
    pass


class GeometryMismatch(LEHardyError):
    pass


class NoConvergence(LEHardyError):
    """Iterative solver hit its cap; ``last_residual`` holds the final value."""

    def __init__(self, message, last_residual=None, iterations=None):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class InvalidExponent(LEHardyError):
    pass


class InvalidDimension(LEHardyError):
    pass


class MissingGamma(LEHardyError):
    pass


class ZeroField(LEHardyError):
    pass


class BallNotContained(LEHardyError):
    pass


class ConfigError(LEHardyError):
    pass
