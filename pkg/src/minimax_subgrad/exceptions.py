"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidBoundError(DomainError):
    """The error-bound function is not admissible for the requested class."""


class ConfigError(ValueError):
    """An experiment or oracle is missing required configuration."""
