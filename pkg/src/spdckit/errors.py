"""Exception types shared by the toolkit."""


class SpdcError(Exception):
    """Base class for toolkit errors."""


class DomainError(SpdcError, ValueError):
    """An argument lies outside the range a model is valid for."""


class PreconditionError(SpdcError, ValueError):
    """Inputs violate a physical or structural precondition."""


class NumericalError(SpdcError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``estimate`` and ``error_bound`` carry the best result obtained.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
