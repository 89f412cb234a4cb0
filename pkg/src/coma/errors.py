"""Exception types shared across the package.

The CLI maps each class to its own exit code, so library code raises the
most specific one that applies.
"""


class ComaError(Exception):
    """Base class for package errors."""


class ConfigError(ComaError, ValueError):
    """Bad configuration key, value or command-line flag."""


class DataError(ComaError, ValueError):
    """Malformed input data (CSV rows, interval endpoints, weights)."""


class ContractViolation(ComaError, RuntimeError):
    """A user-supplied callable broke the contract it was declared with."""


class UnboundedMeasure(ComaError, ValueError):
    """Raised when measuring the full real line."""
