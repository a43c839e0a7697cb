"""
Exception hierarchy.

Three families map onto the CLI exit codes:
    ConfigError     -> 2
    DataError       -> 3
    NumericalError  -> 4

Library code raises; only cli.py turns exceptions into exit codes.
"""

from __future__ import annotations


class ExtremeScoreError(Exception):
    exit_code: int = 1


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------
class ConfigError(ExtremeScoreError):
    exit_code = 2


class DataError(ExtremeScoreError):
    exit_code = 3


class NumericalError(ExtremeScoreError):
    exit_code = 4


# ---------------------------------------------------------------------------
# Numerical
# ---------------------------------------------------------------------------
class DomainError(NumericalError, ValueError):
    """Argument outside the domain of a function."""


class NonexistenceError(NumericalError, ValueError):
    """The requested score does not exist for these parameters (e.g. CRPS with gamma >= 1)."""


class DegenerateWeightError(NumericalError, ValueError):
    """E|W(X) - W(X')| is zero, so scaled scores are undefined."""


class OracleFailureError(NumericalError):
    """Quadrature did not converge within the subdivision limit."""


class SampleTooSmallError(NumericalError, ValueError):
    pass


class DegenerateSampleError(NumericalError, ValueError):
    pass


class ThresholdTooHighError(NumericalError, ValueError):
    pass


class SingularHessianError(NumericalError):
    pass


class MissingStdErrError(NumericalError):
    pass


class AllZeroDifferencesError(NumericalError, ValueError):
    pass


class DegenerateVarianceError(NumericalError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------
class ParseError(DataError):
    pass


class DuplicateRowError(DataError):
    pass


class MissingYearError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class CovariateMissingError(DataError, ValueError):
    """A trend model was asked to score or fit a series without a covariate."""
