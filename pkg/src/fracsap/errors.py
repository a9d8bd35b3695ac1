"""Exception hierarchy shared by all fracsap modules."""


class FracSapError(Exception):
    """Base class for library errors."""


class InvalidArgument(FracSapError, ValueError):
    """An argument is outside the domain of the operation."""


class ValidationError(FracSapError, ValueError):
    """A spec object violates one of its structural invariants."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class SolverError(FracSapError, RuntimeError):
    """A numerical procedure failed to converge."""


class ConfigError(FracSapError):
    """A configuration file could not be parsed or resolved."""
