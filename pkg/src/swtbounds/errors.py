"""Exception types raised across the package."""


class SwtBoundsError(Exception):
    """Base class for all package errors."""


class NotHermitian(SwtBoundsError, ValueError):
    pass


class NotNormal(SwtBoundsError, ValueError):
    pass


class SpectraOverlap(SwtBoundsError, ValueError):
    pass


class DimensionMismatch(SwtBoundsError, ValueError):
    pass


class IndexOutOfRange(SwtBoundsError, IndexError):
    pass


class InvalidParam(SwtBoundsError, ValueError):
    pass


class NegativeInput(InvalidParam):
    pass


class EmptyBand(SwtBoundsError, ValueError):
    pass


class NoComplement(SwtBoundsError, ValueError):
    pass


class GapZero(SwtBoundsError, ValueError):
    pass


class GapTooSmall(SwtBoundsError, ValueError):
    """Raised when a formula or construction needs 2||V|| < gap."""


class SeriesDiverging(SwtBoundsError, ArithmeticError):
    pass


class ConvergenceViolated(SwtBoundsError, ValueError):
    pass


class BandNotRankOne(SwtBoundsError, ValueError):
    pass


class ThresholdNeverCrossed(SwtBoundsError, RuntimeError):
    pass


class NoDfs(SwtBoundsError, ValueError):
    pass


class DfsViolation(SwtBoundsError, ValueError):
    pass


class SingularS(SwtBoundsError, ValueError):
    pass


class NotSaturated(SwtBoundsError, RuntimeError):
    pass


class ConfigError(SwtBoundsError, ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class StepTooLarge(UserWarning):
    """Integrator norm drift exceeded the tolerated level."""
