"""Exception hierarchy shared by all estimators."""

from __future__ import annotations


class RnlShrinkError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(RnlShrinkError, ValueError):
    """Input data or parameters violate a documented precondition."""


class UnsupportedRegimeError(InvalidInputError):
    """The estimator is not defined for the given (p, n) regime."""


class DegenerateInputError(InvalidInputError):
    """Input is valid in shape but makes the requested quantity undefined."""


class DecompositionError(RnlShrinkError, ArithmeticError):
    """A backend matrix decomposition failed to converge."""


class NumericalError(RnlShrinkError, ArithmeticError):
    """A quantity that must be positive came out non-positive or non-finite."""


class EstimationError(RnlShrinkError):
    """A covariance estimate could not be turned into portfolio weights."""


class NonConvergenceError(RnlShrinkError, RuntimeError):
    """An iteration hit its iteration cap before meeting its tolerance.

    Attributes
    ----------
    residual : float
        Value of the stopping statistic at the last iterate.
    trace : object or None
        Iteration history, when the caller keeps one.
    """

    def __init__(self, message: str, residual: float, trace: object = None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace
