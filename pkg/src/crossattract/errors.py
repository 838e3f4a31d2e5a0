"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CrossAttractError(Exception):
    """Base class for package errors."""


class ConfigurationError(CrossAttractError, ValueError):
    """Invalid parameters or configuration documents."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class InvalidDimensionError(ConfigurationError):
    pass


class InvalidExponentError(ConfigurationError):
    pass


class ShapeError(CrossAttractError, ValueError):
    """Arrays of the wrong length or fields living on different grids."""


class DomainError(CrossAttractError, ValueError):
    """Input outside the mathematical domain (e.g. negative densities)."""


class ConsistencyError(CrossAttractError, RuntimeError):
    """Cached quantities no longer match the data they were derived from."""


class SchemeError(CrossAttractError, RuntimeError):
    """The time integrator could not produce an admissible step."""
