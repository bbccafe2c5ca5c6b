"""
Exceptions raised across the package.

SizeEstimationError - root of every error raised here.
DomainError - an argument lies outside the mathematical domain of an operation.
UnsupportedFactorError - the operation is not defined for the given multiplicative factor.
DataError - input data is empty, malformed or inconsistent.
"""


class SizeEstimationError(Exception):
    """
    Base class for errors raised by the set size library
    """


class DomainError(SizeEstimationError, ValueError):
    """
    Raised when an argument is outside the domain of an operation (e.g. alpha outside (0, 1))
    """


class UnsupportedFactorError(SizeEstimationError, ValueError):
    """
    Raised when an operation has no meaning for a multiplicative factor variant
    (e.g. the antiderivative of an unknown factor)
    """


class DataError(SizeEstimationError, ValueError):
    """
    Raised when input data is empty, malformed or has inconsistent dimensions
    """
