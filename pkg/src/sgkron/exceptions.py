"""Exception types raised across the package."""


class SgkronError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(SgkronError, ValueError):
    pass


class DimensionMismatch(SgkronError, ValueError):
    pass


class InvalidCoefficient(SgkronError, ValueError):
    pass


class NonPositiveTexture(SgkronError, ValueError):
    pass


class InsufficientSamples(SgkronError, ValueError):
    pass


class WindowTooLarge(SgkronError, ValueError):
    pass


class EmptyInput(SgkronError, ValueError):
    pass


class NotConverged(SgkronError, RuntimeError):
    """Fixed-point iteration hit ``max_iter`` before reaching ``tol``."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"fixed point not converged after {iterations} iterations "
            f"(residual={residual:.3e})"
        )


class MalformedHeader(SgkronError, ValueError):
    pass


class SizeMismatch(SgkronError, ValueError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"payload size mismatch: expected {expected} bytes, got {actual}"
        )


class InvalidDims(SgkronError, ValueError):
    pass


class IoError(SgkronError, OSError):
    """A file could not be read or written."""
