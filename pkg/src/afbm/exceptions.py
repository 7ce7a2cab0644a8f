"""Exception hierarchy shared by every module of the package."""


class AfbmError(Exception):
    """Base class for all errors raised by :mod:`afbm`."""


class DomainError(AfbmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularInputError(DomainError):
    """A kernel was evaluated exactly on its singularity."""


class IntervalMismatchError(AfbmError, ValueError):
    """Two iterated-integral objects do not live on adjacent/compatible intervals."""


class DimensionMismatchError(AfbmError, ValueError):
    pass


class CapExceededError(AfbmError, ValueError):
    """A depth, alphabet or word-length cap was exceeded."""


class QuadratureError(AfbmError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, estimate=None, last_change=None):
        super().__init__(message)
        self.estimate = estimate
        self.last_change = last_change


class FactorizationError(AfbmError, ArithmeticError):
    """A covariance matrix could not be factorized within the jitter budget."""

    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class InsufficientSamplesError(AfbmError, ValueError):
    pass


class DegenerateFitError(AfbmError, ValueError):
    """A regression cannot be carried out on the supplied estimates."""
