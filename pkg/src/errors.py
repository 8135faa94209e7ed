"""Exceptions and warnings raised by the toolkit"""

from typing import Optional


class SarTestError(Exception):
    """Base class for every error raised by this package"""


class DimensionError(SarTestError, ValueError):
    """Array shapes or indices do not agree"""


class InstrumentRankError(SarTestError, ArithmeticError):
    """Instrument matrix is rank deficient or has too few columns"""


class SingularSystemError(SarTestError, ArithmeticError):
    """A linear system that must be solved is singular"""


class NotPositiveDefiniteError(SarTestError, ArithmeticError):
    """H-hat failed its Cholesky factorization"""

    def __init__(self, message: str, pivot: Optional[float] = None):
        super().__init__(message)
        self.pivot = pivot


class BasisOverflowError(SarTestError, ArithmeticError):
    """Hermite basis evaluation produced non-finite values"""


class IsolatedUnitError(SarTestError, ValueError):
    """A unit without neighbours makes a degree-based scale degenerate"""


class SchemaError(SarTestError, ValueError):
    """Input table does not match the expected schema"""


class ConfigError(SarTestError, ValueError):
    """Invalid simulation config; `key` names the offending entry"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class FailureBudgetExceeded(SarTestError, RuntimeError):
    """Too many failed replications in a Monte Carlo cell"""


class SieveDimensionWarning(UserWarning):
    """p^3/n is large relative to n"""


class StabilityWarning(UserWarning):
    """Numerical result lies outside the comfortable regime"""
