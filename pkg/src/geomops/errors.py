"""Exception types shared across the package."""


class GeomOpsError(Exception):
    """Base class for all library errors."""


class ExprSyntaxError(GeomOpsError, ValueError):
    """Malformed expression text; ``offset`` is the 0-based byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(GeomOpsError, ArithmeticError):
    """Evaluation left the domain of an operation (log of a negative, 1/0, ...)."""

    def __init__(self, message: str, node=None):
        pos = getattr(node, "pos", None)
        suffix = f" (node at offset {pos})" if pos is not None else ""
        super().__init__(message + suffix)
        self.node = node


class OrderError(GeomOpsError):
    """A field was asked for more derivatives than it can supply."""


class DimensionError(GeomOpsError, ValueError):
    pass


class SingularMatrixError(GeomOpsError, ArithmeticError):
    """Structure matrix singular or too ill-conditioned at a point."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class PreconditionError(GeomOpsError):
    """An operation's mathematical hypothesis was not met at the probes."""


class FlowBlowupError(GeomOpsError, ArithmeticError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, last_valid=None, step=None):
        super().__init__(message)
        self.last_valid = last_valid
        self.step = step
