"""Exception hierarchy shared across the package."""


class FideError(Exception):
    """Base class for all errors raised by :mod:`fide`."""


class DomainError(FideError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedParametersError(FideError, ValueError):
    """Parameters are valid mathematically but outside the supported regime."""


class AccuracyError(FideError, ArithmeticError):
    """A series or iteration failed to reach the requested accuracy."""


class IllConditionedError(FideError, ArithmeticError):
    """A small linear system is too badly conditioned to trust."""


class SingularOperatorError(FideError, ArithmeticError):
    """A step matrix or spectral block is (numerically) singular."""


class ConvergenceError(FideError, RuntimeError):
    """A fixed-point iteration did not converge.

    Attributes
    ----------
    residuals : list of float
        Successive update norms, most recent last.
    step : int or None
        Time-step index where the failure occurred, when meaningful.
    """

    def __init__(self, message, residuals=None, step=None):
        super().__init__(message)
        self.residuals = list(residuals or [])
        self.step = step


class DegenerateNormalizationError(FideError, ZeroDivisionError):
    """A relative error was requested against an all-zero reference."""


class NotApplicableError(FideError, ValueError):
    """A diagnostic needs information the problem does not provide."""
