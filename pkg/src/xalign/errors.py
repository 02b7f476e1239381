"""Exception types shared by the library."""


class XAlignError(Exception):
    """Base class for library errors."""


class InvalidOperandsError(XAlignError, ValueError):
    """Operands violate a precondition (mismatched modulus, zero vector, ...)."""


class GFZeroDivisionError(XAlignError, ZeroDivisionError):
    """Inversion of the zero element of a finite field."""


class SingularMatrixError(XAlignError, ArithmeticError):
    pass


class DegenerateSetError(XAlignError, ArithmeticError):
    """A matched finite-field set whose decoding matrix is singular."""


class DegenerateGeometryError(XAlignError, ArithmeticError):
    """Second-stage projection direction vanished (measure-zero event)."""


class PreconditionError(XAlignError, ValueError):
    pass


class DomainError(XAlignError, ValueError):
    pass


class ResourceLimitError(XAlignError, RuntimeError):
    """A resource guard (codebook size, combination count, rejection cap) tripped."""


class UsageError(XAlignError, ValueError):
    """Bad configuration or command-line input."""
