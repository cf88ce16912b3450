"""Shared exception types."""


class UdkitError(Exception):
    """Base class for all udkit errors."""


class DataError(UdkitError):
    """Input data cannot be processed (malformed file, unknown tag, ...)."""


class ResourceError(UdkitError):
    """A resource file (model, rule table, manifest) is missing or malformed."""
