"""Shared exception types."""


class ValidationError(ValueError):
    """A value violates a declared range or shape constraint."""


class ConfigError(ValueError):
    """A configuration file or key could not be parsed or validated."""
