"""
Exception types raised by the laboratory.

Input problems also derive from ValueError so callers that only guard
against bad arguments keep working.
"""

from typing import List


class OverdetLabError(Exception):
    """Base class for every error raised by overdet_lab."""


class NonStarShaped(OverdetLabError, ValueError):
    pass


class FoldedMap(OverdetLabError, ValueError):
    pass


class EmptyShape(OverdetLabError, ValueError):
    pass


class InadmissibleShape(OverdetLabError, ValueError):
    pass


class NotInterior(OverdetLabError, ValueError):
    pass


class NewtonStall(UserWarning):
    """Issued (never raised) when a boundary projection falls back to the dense scan."""


class OrderTooHigh(OverdetLabError, ValueError):
    pass


class GridMismatch(OverdetLabError, ValueError):
    pass


class InvalidP(OverdetLabError, ValueError):
    pass


class NonFiniteField(OverdetLabError, ValueError):
    pass


class ResolutionOutOfRange(OverdetLabError, ValueError):
    pass


class BadDimension(OverdetLabError, ValueError):
    pass


class SingularSystem(OverdetLabError):
    pass


class Unconverged(OverdetLabError):
    pass


class MaxOnBoundary(OverdetLabError):
    pass


class InequalityViolated(OverdetLabError):
    """An inequality that holds by exact algebra failed: a bug, not a math result."""


class DegenerateDenominator(OverdetLabError):
    pass


class CertificateViolated(OverdetLabError):
    pass


class NoiseFloor(OverdetLabError):
    pass


class CheckFailed(OverdetLabError):
    def __init__(self, message: str, failed: List[str]):
        super().__init__(message)
        self.failed = failed
