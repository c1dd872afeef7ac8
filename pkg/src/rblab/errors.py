"""Exception types shared across the package."""

from __future__ import annotations


class RBError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RBError, ValueError):
    """A model parameter or derived size violates its constraints."""


class ConfigError(RBError, ValueError):
    """An analysis or sweep configuration is inconsistent or unsatisfiable."""


class ParseError(RBError, ValueError):
    """A text input (instance file, config file) is malformed.

    Carries the 1-based line number when known, so callers can point at
    the offending line.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
