"""Exception types shared across the toolkit."""


class DriftwatchError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(DriftwatchError, ValueError):
    """A configuration value or function argument is out of its domain."""


class FitError(DriftwatchError):
    """Training input cannot produce a usable model."""


class ScoreError(DriftwatchError):
    """A sample cannot be scored against a fitted model."""


class ParseError(DriftwatchError):
    """Malformed record input; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class FormatError(DriftwatchError):
    """Byte-level or document-level violation of a file format."""


class VersionError(FormatError):
    """The file declares a format version this build cannot read."""
