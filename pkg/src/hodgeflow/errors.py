"""Exception types shared across the package."""


class HodgeflowError(Exception):
    """Base class for all errors raised by hodgeflow."""


class ValidationError(HodgeflowError, ValueError):
    """Malformed input: bad shapes, invalid simplices, unreadable files."""


class ConsistencyError(HodgeflowError, ArithmeticError):
    """A numerical self-check failed (rank accounting, energy balance, ...)."""
