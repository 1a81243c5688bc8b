"""Exception hierarchy. Each class maps to one CLI exit code."""


class DriError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class UsageError(DriError, ValueError):
    """Arguments violate a function contract (shape, range, unknown option)."""

    exit_code = 2


class ValidationError(DriError, ValueError):
    """Input data fail a schema or domain check."""

    exit_code = 3


class ParseError(ValidationError):
    """A file could not be parsed against the expected layout."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ComputationError(DriError, ArithmeticError):
    """A well-formed input admits no defined result."""

    exit_code = 4
