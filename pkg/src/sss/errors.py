"""Exception types raised across the package."""


class SSSError(Exception):
    """Base class for all package errors."""


class GraphStructureError(SSSError, ValueError):
    """Adjacency violates symmetry, nonnegativity or the zero diagonal."""


class ParameterError(SSSError, ValueError):
    """An argument is outside its admissible range."""


class GenerationError(SSSError, RuntimeError):
    """A random graph generator failed to produce a connected graph."""


class GraphParseError(SSSError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(SSSError, ValueError):
    """Signal or matrix length does not match the graph size."""


class CapacityError(SSSError, ValueError):
    """Problem is too large for the dense solver."""


class UnsupportedKernelError(SSSError, ValueError):
    """Kernel cannot be used on the requested path (e.g. polynomial approximation of a discontinuous kernel)."""


class NumericalError(SSSError, ArithmeticError):
    """Ill-conditioning or non-convergence made a result untrustworthy."""
