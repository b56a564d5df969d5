"""Exception hierarchy shared by every corrfilter module."""

from __future__ import annotations


class CorrFilterError(ValueError):
    """Base class for all library errors."""


class InvalidMatrix(CorrFilterError):
    pass


class NotPositiveSemiDefinite(CorrFilterError):
    pass


class DimensionMismatch(CorrFilterError):
    pass


class SingularPoint(CorrFilterError):
    pass


class NotNormalized(CorrFilterError):
    pass


class InvalidParameter(CorrFilterError):
    pass


class InvalidLoading(CorrFilterError):
    pass


class InvalidDimension(CorrFilterError):
    pass


class InvalidPlan(CorrFilterError):
    pass


class InvalidCorrelation(CorrFilterError):
    pass


class DegenerateFirstStep(CorrFilterError):
    pass


class SingularMatrix(CorrFilterError):
    """A loss needed an inverse of a matrix whose smallest eigenvalue is below the floor."""


class Undefined(CorrFilterError):
    """An analytic expectation was requested outside its domain (n <= p + 1)."""
