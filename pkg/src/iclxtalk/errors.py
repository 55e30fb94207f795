"""Exception hierarchy shared across modules."""


class IclError(Exception):
    """Base class for all package errors."""


class InvalidGeometry(IclError, ValueError):
    pass


class InvalidArgument(IclError, ValueError):
    pass


class SingularityError(IclError, ArithmeticError):
    """Two filaments are closer than the quadrature distance floor."""


class DomainError(IclError, ArithmeticError):
    pass


class UnderrunError(IclError, ValueError):
    """Payload ran out of bits before a frame could be filled."""


class ConfigError(IclError, ValueError):
    pass


class ParseError(IclError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
