"""Toolkit exception hierarchy, mapped onto CLI exit codes."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ToolkitError):
    """Invalid option, order, or configuration value (exit code 2)."""


class DataError(ToolkitError):
    """Unreadable or malformed input data (exit code 3)."""


class NumericError(ToolkitError):
    """Estimation or filtering failure: non-convergence, singular matrices,
    divergent prediction variances (exit code 4)."""
