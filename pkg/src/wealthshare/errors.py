"""Exception and warning types raised by wealthshare."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical method stopped before meeting its tolerance.

    The best available estimate and its error bound are kept on the exception
    so callers can decide whether a near-miss is usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NoSignChangeError(ValueError):
    """A bracketing root finder was given a bracket without a sign change."""


class KindError(ValueError):
    """The operation is not defined for this ensemble kind."""


class NoTransitionError(ValueError):
    """No modality transition exists for the requested parameters."""


class ResolutionWarning(UserWarning):
    """An extrema scan was too coarse to separate neighbouring features."""
