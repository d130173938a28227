"""Exception hierarchy shared by every module."""


class QmlError(Exception):
    """Base class for all errors raised by qmlgenome."""


class ConfigurationError(QmlError, ValueError):
    """A parameter or configuration value is out of its allowed range."""


class UsageError(QmlError, ValueError):
    """An operation was called with arguments that violate its contract."""


class DataError(QmlError, ValueError):
    """Input data is malformed or degenerate."""


class NumericError(QmlError, ArithmeticError):
    """A numerical routine produced or received non-finite / invalid values."""


class FormatError(QmlError, ValueError):
    """A serialized file is corrupt or was written by an incompatible version."""
