"""Exception hierarchy shared by all modules."""


class BoxdimError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BoxdimError, ValueError):
    """Operands from different groups, malformed elements, unsupported family."""


class ResourceError(BoxdimError):
    """A configured size cap (ball size, index, clique count, search nodes) was hit."""

    def __init__(self, message, attained=None):
        super().__init__(message)
        self.attained = attained


class ParameterError(BoxdimError, ValueError):
    """Bad numeric parameter (non-increasing lambda, negative radius, ...)."""


class PreconditionError(BoxdimError):
    """An operation's documented precondition does not hold."""


class IntegrityError(BoxdimError):
    """Internal consistency failure (inconsistent homomorphism, disconnected Schreier graph)."""


class UnsupportedSpaceError(BoxdimError):
    """A structured constructor was given a space without the structure it needs."""
