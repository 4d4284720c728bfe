"""Exception hierarchy shared by every module of the package."""


class ConetentError(Exception):
    """Base class for all library errors."""


class DomainError(ConetentError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapabilityError(ConetentError, NotImplementedError):
    """The request exceeds what the implementation supports (order, dimension...)."""


class ContractError(ConetentError, ValueError):
    """The operation was called on an input it is not meant for."""


class ConfigError(ConetentError, ValueError):
    """An experiment configuration is malformed."""


class RangeError(ConetentError, OverflowError):
    """The unscaled result does not fit in a double; use the scaled entry point."""


class AccuracyError(ConetentError, ArithmeticError):
    """A numerical procedure missed its tolerance.

    The best available estimate is kept on the exception so callers can
    decide whether it is still usable.
    """

    def __init__(self, message, estimate=None, est_error=None):
        super().__init__(message)
        self.estimate = estimate
        self.est_error = est_error
