"""Exception types shared across the package."""


class AttnOTError(Exception):
    """Base class for all package errors."""


class ParameterError(AttnOTError, ValueError):
    """An argument is outside its admissible range."""


class DimensionMismatchError(AttnOTError, ValueError):
    """Two inputs that must agree in shape do not."""

    def __init__(self, message, left=None, right=None):
        super().__init__(message)
        self.left = left
        self.right = right


class SolverError(AttnOTError, RuntimeError):
    """An internal solver failed on an instance that should be feasible."""


class DivergenceError(AttnOTError, FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None, last_finite_epoch=None):
        super().__init__(message)
        self.epoch = epoch
        self.last_finite_epoch = last_finite_epoch


class ParseError(AttnOTError, ValueError):
    """Malformed input file."""

    def __init__(self, message, path=None, line=None):
        if path is None:
            loc = ""
        elif line is None:
            loc = f"{path}: "
        else:
            loc = f"{path}:{line}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line
