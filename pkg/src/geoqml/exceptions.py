"""Exception and warning types shared across the package."""


class GeometryError(ValueError):
    """Base class for invalid inputs to geometric routines."""


class DimensionError(GeometryError):
    """Operands have incompatible shapes."""


class InvariantError(GeometryError):
    """A value violates the invariants of its type (e.g. a non-SPD matrix)."""


class EncodingError(GeometryError):
    """A classical vector cannot be amplitude-encoded."""


class ParseError(ValueError):
    """Malformed text input; ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch):
        self.epoch = epoch
        super().__init__(f"{message} (epoch {epoch})")


class ConvergenceWarning(UserWarning):
    """An iterative routine stopped before reaching its tolerance."""
