"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ContestError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ContestError, ValueError):
    """Malformed or inconsistent input (bad table, mismatched lengths, ...)."""


class DomainError(ContestError, ValueError):
    """A parameter lies outside the region where the quantity is defined."""


class IntegrabilityError(DomainError):
    """An expectation diverges; ``rank`` names the offending order statistic."""

    def __init__(self, message: str, rank: int | None = None):
        super().__init__(message)
        self.rank = rank


class BracketError(ContestError, ValueError):
    """Root-finding target not bracketed by the supplied interval."""


class UnsupportedOrderingError(ContestError):
    """Marginal effects fall outside the orderings with a known optimum."""


class QuadratureError(ContestError, ArithmeticError):
    """Refinement budget exhausted before the error target was met."""

    def __init__(self, message: str, value: float, abs_error: float):
        super().__init__(f"{message} (best estimate {value!r}, error bound {abs_error:.3e})")
        self.value = value
        self.abs_error = abs_error
