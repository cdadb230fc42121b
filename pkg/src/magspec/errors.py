"""Exception hierarchy shared across the package."""


class MagspecError(Exception):
    """Base class for all package errors."""


class DomainError(MagspecError):
    """Input violates a mathematical precondition (degenerate well, h <= 0, ...)."""


class ConfigError(MagspecError):
    """Bad configuration file or CLI arguments."""


class ParseError(MagspecError):
    """Syntax error in a field expression.

    Attributes
    ----------
    offset : int
        Byte offset of the offending token in the source string.
    expected : tuple of str
        Token kinds that would have been accepted at this position.
    """

    def __init__(self, message, offset, expected=()):
        super().__init__(message)
        self.offset = offset
        self.expected = tuple(expected)
