"""Exception types raised by the library."""


class QszegoError(Exception):
    """Base class for every error raised here."""


class NonUnitRotor(QszegoError, ValueError):
    pass


class BadAlpha(QszegoError, ValueError):
    pass


class DimMismatch(QszegoError, ValueError):
    pass


class BadScale(QszegoError, ValueError):
    pass


class NotInDomain(QszegoError, ValueError):
    pass


class StepTooSmall(QszegoError, ValueError):
    """Finite-difference step so small that rounding dominates."""


class EvalFailure(QszegoError, RuntimeError):
    pass


class OrderTooHigh(QszegoError, ValueError):
    pass


class ZeroArgument(QszegoError, ValueError):
    pass


class DiagonalSingularity(QszegoError, ValueError):
    pass


class NearZeroModulus(QszegoError, ValueError):
    pass


class BoundaryUncertain(QszegoError, RuntimeError):
    """A point sits within the certified truncation error of a tile face."""


class NoCandidateFound(QszegoError, RuntimeError):
    def __init__(self, message, near_miss=None):
        super().__init__(message)
        self.near_miss = near_miss


class DepthTooShallow(QszegoError, RuntimeError):
    pass


class GramSingular(QszegoError, RuntimeError):
    pass


class TooManyNodes(QszegoError, ValueError):
    pass


class TailDominates(UserWarning):
    pass


class BadExponent(QszegoError, ValueError):
    """Hardy exponent outside (2/3, 1] or moment order below the floor."""
