"""Exception hierarchy shared by all pipeline stages."""


class ExplainItError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ExplainItError, ValueError):
    """Invalid parameters or pipeline configuration."""


class DataError(ExplainItError, ValueError):
    """Malformed input data or intermediate artifact."""


class SchemaError(DataError):
    """Intermediate artifact with an unexpected schema name or version."""

    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"schema mismatch: expected {expected}, found {found}")


class NumericalError(ExplainItError, ArithmeticError):
    """An optimizer failed to converge or produced an invalid solution."""
