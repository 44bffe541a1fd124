"""Shared exception types."""


class TwinfedError(Exception):
    """Base class for all package errors."""


class InvalidInputError(TwinfedError):
    """Raised when an operation receives malformed or inconsistent inputs."""


class IngestionError(TwinfedError):
    """Raised when a CSV file cannot be parsed into a dataset."""


class NumericError(TwinfedError):
    """Raised when training produces non-finite values."""


class ConfigError(TwinfedError):
    """Raised when an experiment configuration fails validation.

    ``field`` carries the dotted path of the offending config entry.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
