"""Exception hierarchy shared by all bethe modules."""


class BetheError(Exception):
    """Base class for every error raised by this package."""


class PoleError(BetheError, ZeroDivisionError):
    """A rational kernel or eigenvalue was evaluated at (or too close to) a pole."""

    def __init__(self, message, kernel=None, difference=None, index=None):
        super().__init__(message)
        self.kernel = kernel
        self.difference = difference
        self.index = index


class AmbiguousMatch(BetheError):
    """Two elements of a multiset are closer than the matching tolerance."""


class OffShellError(BetheError):
    """A parameter set required to be on-shell violates the Bethe equations."""


class MissingTerm(BetheError):
    """A requested key is absent from a state expansion."""


class NoConvergence(BetheError):
    """No Newton seed converged."""


class DegenerateRoot(BetheError):
    """Newton collapsed two Bethe roots onto each other."""


class UnstableLimit(BetheError):
    """A numerical limit did not stabilise across step sizes or directions."""


class DimensionCap(BetheError):
    """The requested chain is too long for dense matrices."""


class DimensionMismatch(BetheError, ValueError):
    """Vectors or operators of incompatible dimension were combined."""


class ParseError(BetheError, ValueError):
    """Malformed configuration text."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}" + (f", column {column}" if column else "") + f": {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(BetheError, ValueError):
    """Configuration is well formed but semantically invalid."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
