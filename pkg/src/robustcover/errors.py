"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """A point lies outside the domain on which a quantity is defined."""


class InvalidStateError(RuntimeError):
    """An operation was called on an object that is not ready for it."""


class ConfigurationError(ValueError):
    """A scenario configuration cannot be realized."""
