"""Exception hierarchy.

``DataError`` covers anything wrong with input files or the data inside them
(the CLI maps it to exit code 2); ``ConfigError`` covers invalid
user-supplied options (exit code 1).
"""

from __future__ import annotations


class SkyselectError(Exception):
    """Base class for all package errors."""


class ConfigError(SkyselectError):
    """Invalid option, flag or parameter combination."""


class DataError(SkyselectError):
    """Malformed or inconsistent input data."""


class SchemaError(DataError):
    def __init__(self, column: str, source: str = "<stream>"):
        self.column = column
        self.source = source
        super().__init__(f"{source}: missing required column {column!r}")


class RowError(DataError):
    """A single cell could not be parsed or violates its domain."""

    def __init__(self, row: int, column: str, message: str, source: str = "<stream>"):
        self.row = row
        self.column = column
        self.source = source
        super().__init__(f"{source}: row {row}, column {column!r}: {message}")


class StreamValidationError(DataError):
    """A row-level invariant of the stream (e.g. timestamp order) is violated."""

    def __init__(self, row: int, message: str, source: str = "<stream>"):
        self.row = row
        self.source = source
        super().__init__(f"{source}: row {row}: {message}")


class LandingError(DataError):
    """No usable landing could be located in a flight stream."""


class ConvergenceError(SkyselectError):
    def __init__(self, message: str, iterations: int, diagnostics: dict | None = None):
        self.iterations = iterations
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} (after {iterations} iterations; {self.diagnostics})")
