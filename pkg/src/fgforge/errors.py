"""Exception types raised by the engine."""

from __future__ import annotations


class FGForgeError(Exception):
    """Base class for all engine errors."""


class OrderMismatch(FGForgeError, ValueError):
    """Two series with incompatible truncation were combined."""


class SingularMetric(FGForgeError):
    """A metric (or matrix series) is not invertible somewhere on the grid."""

    def __init__(self, message: str, worst_point=None, value: float | None = None):
        super().__init__(message)
        self.worst_point = worst_point
        self.value = value


class NotPositiveDefinite(SingularMetric):
    """A boundary metric failed the positive-definiteness check."""


class CancellationFailure(FGForgeError):
    """Negative powers of t survived where an identity requires them to cancel."""

    def __init__(self, order: int, norm: float, tol: float):
        super().__init__(
            f"coefficient of t^{order} has sup norm {norm:.3e} > tol {tol:.1e}"
        )
        self.order = order
        self.norm = norm
        self.tol = tol


class ConstraintViolation(FGForgeError):
    """Free boundary data fails the trace / divergence constraints."""

    def __init__(self, message: str, trace_norm: float, divergence_norm: float,
                 constraint: str):
        super().__init__(message)
        self.trace_norm = trace_norm
        self.divergence_norm = divergence_norm
        self.constraint = constraint


class SingularIndicial(FGForgeError):
    """The pointwise linear system for an expansion coefficient is degenerate."""

    def __init__(self, order: int, min_singular: float):
        super().__init__(
            f"indicial system at order {order} is singular "
            f"(relative singular value {min_singular:.2e})"
        )
        self.order = order
        self.min_singular = min_singular


class ResidualCheckFailure(FGForgeError):
    """A post-condition on the Einstein residual did not hold."""

    def __init__(self, message: str, order: int, norm: float):
        super().__init__(message)
        self.order = order
        self.norm = norm
