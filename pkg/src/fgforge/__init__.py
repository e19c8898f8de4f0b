"""Truncated Fefferman-Graham expansions of 4d asymptotically hyperbolic
Einstein metrics on the 3-torus, with curvature audits, linearized
operators, boundary-symbol ellipticity checks and Wick rotation."""

from .errors import (CancellationFailure, ConstraintViolation, FGForgeError,
                     NotPositiveDefinite, OrderMismatch, ResidualCheckFailure,
                     SingularIndicial, SingularMetric)
from .expansion import (BoundaryData, FGExpansion, compute_g2, expand, geodesic_normalize,
                        solve_order, validate_tt, wick_rotate)
from .field import GridSpec, ScalarField, SymForm
from .geometry import BulkMetric, Geometry, boundary_curvature, curvature4, einstein_residual
from .reference import reference
from .series import Series

__version__ = "0.1.0"

__all__ = [
    "BoundaryData", "BulkMetric", "CancellationFailure", "ConstraintViolation",
    "FGExpansion", "FGForgeError", "Geometry", "GridSpec", "NotPositiveDefinite",
    "OrderMismatch", "ResidualCheckFailure", "ScalarField", "Series", "SingularIndicial",
    "SingularMetric", "SymForm", "boundary_curvature", "compute_g2", "curvature4",
    "einstein_residual", "expand", "geodesic_normalize", "reference", "solve_order",
    "validate_tt", "wick_rotate",
]
