"""Exception hierarchy. The CLI maps each family to its own exit code."""


class SurprisalError(Exception):
    """Base class for all package errors."""


class ConfigError(SurprisalError):
    """Invalid configuration: bad parameters, missing target, no fit."""


class DataError(SurprisalError):
    """Problem with input data or its schema."""


class ParseError(DataError):
    """A CSV row could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class SchemaError(DataError):
    """Data does not conform to the declared schema."""


class DomainError(SurprisalError, ValueError):
    """A numeric routine was called outside its domain."""
