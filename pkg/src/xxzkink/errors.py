"""Exception hierarchy."""


class XXZKinkError(Exception):
    pass


class DomainError(XXZKinkError, ValueError):
    """Argument outside the supported parameter range."""


class ResourceError(XXZKinkError):
    """Requested computation exceeds a configured size cap."""


class IntegrationError(XXZKinkError, RuntimeError):
    """Time stepping failed to reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularityError(XXZKinkError, ZeroDivisionError):
    """A closed-form expression hit a vanishing denominator."""

    def __init__(self, message, composition=None, vertex=None):
        super().__init__(message)
        self.composition = composition
        self.vertex = vertex


class ProjectionMismatchError(XXZKinkError, ValueError):
    """Vector is not contained in the span of the supplied projectors."""


class PreconditionError(XXZKinkError, ValueError):
    pass
