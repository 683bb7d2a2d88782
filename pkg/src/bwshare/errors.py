"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class UnknownIndexError(IndexError):
    """An operator/region/client identifier that the configuration does not know.

    Kept distinct from constraint violations: a decision that refers to a
    client that does not exist is malformed, not merely infeasible.
    """


class DomainError(ValueError):
    """Numeric argument outside the domain of a closed-form expression."""


class UndefinedGainError(ArithmeticError):
    """Relative gain requested against a zero baseline."""


class InstanceTooLargeError(RuntimeError):
    """Brute-force enumeration would exceed its budget."""
