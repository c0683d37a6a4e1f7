"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line layer can map it
without inspecting messages: 3 for bad data, 4 for numerical failure.
"""


class RFSError(Exception):
    exit_code = 3


class DataValidationError(RFSError, ValueError):
    """Malformed input: bad shapes, labels, file contents."""


class DimensionMismatchError(DataValidationError):
    pass


class EmptyDataError(DataValidationError):
    pass


class OutOfSupportError(DataValidationError):
    """An observed cardinality lies outside an explicitly sized support."""


class NumericalError(RFSError, ArithmeticError):
    exit_code = 4


class CovarianceError(NumericalError, ValueError):
    """Covariance matrix is not symmetric positive-definite."""


class SingularCovarianceError(CovarianceError):
    """Covariance is positive-definite in name only (condition number too large)."""
