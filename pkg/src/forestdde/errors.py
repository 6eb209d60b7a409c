"""Exception types shared across the package."""


class ForestDDEError(Exception):
    """Base class for all package errors."""


class ValidationError(ForestDDEError, ValueError):
    """A configuration or input violates a model assumption."""


class DomainError(ForestDDEError, ValueError):
    """A query falls outside the interval where a quantity is defined."""


class UnsupportedError(ForestDDEError, ValueError):
    """The requested operation is not available for this input."""


class NumericalError(ForestDDEError, RuntimeError):
    """The numerical scheme failed (divergence, lost positivity, ...)."""
