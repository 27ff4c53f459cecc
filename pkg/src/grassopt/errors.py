"""Exception types shared across the package."""


class GrassoptError(Exception):
    """Base class for all package errors."""


class DimensionError(GrassoptError, ValueError):
    """Shapes or lengths of operands do not conform."""


class NumericalError(GrassoptError, ArithmeticError):
    """Non-finite values or a failed factorization."""


class PreconditionError(GrassoptError, ValueError):
    """Input violates a documented precondition."""


class ParseError(GrassoptError, ValueError):
    """Malformed file input; the message names the byte or line offset."""


class ValidationError(GrassoptError, ValueError):
    """Semantically invalid data (label range, schema mismatch)."""


class ConfigError(GrassoptError, ValueError):
    """Unknown or invalid configuration key or value."""
