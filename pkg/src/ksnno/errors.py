"""Exception taxonomy shared by all modules."""


class KsnnoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(KsnnoError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(KsnnoError, ValueError):
    """A configuration value violates an invariant (bad n, m, seed, ...)."""


class DegenerateWeightError(KsnnoError, ArithmeticError):
    """A normalizing weight sum underflowed below the hard guard.

    Raised instead of silently returning garbage when the density mass
    available to the operator is numerically zero.
    """


class FixtureFormatError(KsnnoError, ValueError):
    """An increment fixture file could not be parsed."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row
