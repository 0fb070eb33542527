"""Exception types that map onto CLI exit codes."""


class ConfigError(ValueError):
    """Bad configuration key or value."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""
