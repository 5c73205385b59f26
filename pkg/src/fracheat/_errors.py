"""Exception taxonomy shared across the package."""
from __future__ import annotations


class FracheatError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FracheatError, ValueError):
    """A parameter is outside the mathematical domain of the operation."""


class SeriesRangeError(FracheatError, ArithmeticError):
    """A series evaluation was requested outside its trustworthy range.

    Raised instead of returning digits that would be dominated by
    cancellation noise.
    """


class ConvergenceError(FracheatError, RuntimeError):
    """An iterative scheme exhausted its budget before meeting tolerance."""


class ContourError(FracheatError, RuntimeError):
    """A rotated-contour integral was requested where the rotation is invalid."""


class StencilUnderflowError(FracheatError, ArithmeticError):
    """A finite-difference stencil produced values below rounding noise.

    Raised when the field sampled on a stencil is so small that the
    differenced result carries no trustworthy digits.
    """
