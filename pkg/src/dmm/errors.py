"""Exception hierarchy shared by the package."""


class DmmError(Exception):
    """Base class for all errors raised by :mod:`dmm`."""


class ConfigError(DmmError, ValueError):
    """Invalid configuration, schema or parameter."""


class SchemaError(ConfigError):
    """A survey vector or table does not match its schema."""


class EncodingError(DmmError, ValueError):
    """A modality index or category is outside its block."""


class DataError(DmmError, ValueError):
    """Malformed or incomplete input data."""


class DegenerateOperatorError(DmmError):
    """The operator has no eigenvalue above the rank tolerance."""
