"""Exception types shared across the package."""


class CoresetLabError(Exception):
    """Base class for all package errors."""


class ValidationError(CoresetLabError, ValueError):
    """Invalid arguments, malformed data, or broken invariants."""


class ParseError(ValidationError):
    """Malformed file contents. Carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class ZeroCostError(CoresetLabError, ValueError):
    """A relative error was requested against a zero true cost."""


class DigestMismatchError(ValidationError):
    """Linked artifacts (dataset, solution, coreset) do not belong together."""
