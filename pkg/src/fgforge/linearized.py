"""Linearized Einstein operators on the AH metric g = t^-2 gbar.

The operators need second derivatives of a metric with a double pole at
t = 0, so they are evaluated in a slice frame: around a fixed t0 > 0 the
physical metric and the perturbation are expanded in tau = t - t0 (see
``geometry.slice_metric``) and everything is read off at tau = 0.  A
perturbation k of the physical metric is specified through its compactified
version kbar = t^2 k, which is a regular series in t.

Operators (conventions of ``geometry``):

* L_E(k) = D*D k - 2 R(k) - 2 delta* beta(k), the linearization of
  2 (Ric + 3 eps g) at an Einstein metric.
* L(k) = D*D k - 2 R(k), the Bianchi-gauged operator.  The other common
  normalization 1/2 D*D - R is L/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import GridSpec, fourier_field
from .geometry import BulkMetric, Geometry, embed_bulk, slice_metric
from .series import INF, Series

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Perturbation:
    """Symmetric (4, 4)-valued series k with a declared leading order.

    ``center`` is None for a series in t (compactified frame) and t0 for a
    series in tau = t - t0 (slice frame).
    """

    k: Series
    weight: float | None = None
    center: float | None = None

    def __post_init__(self):
        if self.k.value_shape != (4, 4):
            raise ValueError(f"perturbation must be (4, 4)-valued, got {self.k.value_shape}")
        if self.weight is not None:
            lead = self.k.leading_order(WEIGHT_TOL)
            if lead != self.weight:
                raise ValueError(f"declared weight {self.weight} but leading order is {lead}")

    def scale(self, c: float) -> Perturbation:
        return Perturbation(self.k.scale(c), None, self.center)

    def __add__(self, other: Perturbation) -> Perturbation:
        return Perturbation(self.k + other.k, None, self.center)


def _metric(m) -> Series:
    return m.metric4() if isinstance(m, BulkMetric) else m


def slice_geometry(m, t0: float, top: int = 2) -> Geometry:
    """Curvature engine for t^-2 gbar expanded around t0."""
    return Geometry(slice_metric(_metric(m), t0, top), 4)


def to_slice(pert: Perturbation, t0: float, top: int = 2) -> Perturbation:
    """Physical perturbation t^-2 kbar expanded around t0."""
    if pert.center is not None:
        raise ValueError("perturbation is already in a slice frame")
    return Perturbation(slice_metric(pert.k, t0, top), None, t0)


def _slice_args(m, pert: Perturbation, t0: float | None, top: int):
    if isinstance(m, Geometry):
        if pert.center is None:
            raise ValueError("pass a slice-frame perturbation with a slice geometry")
        return m, pert
    if t0 is None:
        raise ValueError("t0 is required for a compactified background")
    return slice_geometry(m, t0, top), to_slice(pert, t0, top)


def linearized_einstein(m, pert: Perturbation, t0: float | None = None,
                        top: int = 2) -> Perturbation:
    """D*D k - 2 R(k) - 2 delta* beta(k) in the slice frame.

    ``m`` is a slice Geometry (with a slice-frame perturbation) or a
    compactified background (BulkMetric or (4, 4) series) plus t0.  The
    result is valid through tau^(top - 2).
    """
    geo, p = _slice_args(m, pert, t0, top)
    gauged = geo.rough_laplacian(p.k) - geo.curvature_action(p.k).scale(2.0)
    gauge = geo.delta_star(geo.bianchi(p.k)).scale(2.0)
    return Perturbation(gauged - gauge, None, p.center)


def gauged_operator(m, pert: Perturbation, t0: float | None = None,
                    top: int = 2) -> Perturbation:
    """L(k) = D*D k - 2 R(k) in the slice frame."""
    geo, p = _slice_args(m, pert, t0, top)
    return Perturbation(geo.rough_laplacian(p.k) - geo.curvature_action(p.k).scale(2.0),
                        None, p.center)


# -- independent routes used by the checks ----------------------------------


def lie_derivative(geo: Geometry, x: Series) -> Series:
    """(L_X g)_ab = X^c d_c g_ab + g_cb d_a X^c + g_ac d_b X^c, partials only."""
    g = geo.metric
    dg = geo.gradient(g)  # [c, a, b]
    dx = geo.gradient(x)  # [a, c] = d_a X^c
    return (x.mul(dg, "c,cab->ab") + g.mul(dx, "cb,ac->ab") + g.mul(dx, "ac,bc->ab"))


def gauge_identity_residual(m, pert: Perturbation, t0: float | None = None,
                            top: int = 2) -> Series:
    """L_E(k) - L(k) + L_{beta#} g, which vanishes since 2 delta* w = L_{w#} g."""
    geo, p = _slice_args(m, pert, t0, top)
    le = linearized_einstein(geo, p).k
    ll = gauged_operator(geo, p).k
    beta_up = geo.inverse.mul(geo.bianchi(p.k), "ab,b->a")
    return le - ll + lie_derivative(geo, beta_up)


def jacobi_laplacian(geo: Geometry, f: Series) -> Series:
    """Delta f = g^ab d_a d_b f + (d_a g^ab) d_b f + 1/2 g^bc d_a g_bc g^ad d_d f.

    This is |g|^-1/2 d_a (|g|^1/2 g^ab d_b f) written with the log-det
    derivative; no Christoffel symbols are involved.
    """
    gi = geo.inverse
    df = geo.gradient(f)
    ddf = geo.gradient(df)  # [a, b]
    dgi = geo.gradient(gi)  # [a, a', b]
    dlogdet = gi.mul(geo.gradient(geo.metric), "bc,abc->a").scale(0.5)
    return (gi.mul(ddf, "ab,ab->") + dgi.mul(df, "aab,b->")
            + dlogdet.mul(gi.mul(df, "ad,d->a"), "a,a->"))


def trace_identity_residual(m, pert: Perturbation, signature: int, t0: float | None = None,
                            top: int = 2) -> Series:
    """tr L(k) - (-Delta tr k + 6 eps tr k) on an Einstein background.

    Uses tr D*D k = -Delta tr k and tr R(k) = Ric(k) = -3 eps tr k.  No gauge
    condition on k is needed for this local identity.
    """
    geo, p = _slice_args(m, pert, t0, top)
    lhs = geo.trace(gauged_operator(geo, p).k)
    trk = geo.trace(p.k)
    rhs = -jacobi_laplacian(geo, trk) + trk.scale(6.0 * signature)
    return lhs - rhs


def einstein_operator(g: Series, signature: int) -> Series:
    """Ric_g + 3 eps g for a slice-frame metric."""
    return Geometry(g, 4).ricci + g.scale(3.0 * signature)


def fd_linearization(m, pert: Perturbation, step: float, signature: int,
                     t0: float | None = None, top: int = 2) -> np.ndarray:
    """Central difference of 2 (Ric + 3 eps g) along k, at tau = 0."""
    if isinstance(m, Geometry):
        g, k = m.metric, pert.k
    else:
        g = slice_metric(_metric(m), t0, top)
        k = to_slice(pert, t0, top).k
    plus = einstein_operator(g + k.scale(step), signature).coeff(0)
    minus = einstein_operator(g - k.scale(step), signature).coeff(0)
    return (plus - minus) / step


def fd_check(m, pert: Perturbation, signature: int, t0: float,
             steps=(1e-3, 5e-4), top: int = 2) -> dict:
    """Compare L_E(k) with central differences of the nonlinear operator."""
    geo = slice_geometry(m, t0, top)
    p = to_slice(pert, t0, top)
    le = linearized_einstein(geo, p).k.coeff(0)
    errors = [float(np.max(np.abs(le - fd_linearization(geo, p, s, signature))))
              for s in steps]
    if errors[1] == 0.0:
        order = INF
    elif errors[0] == 0.0:
        order = -INF
    else:
        order = math.log(errors[0] / errors[1]) / math.log(steps[0] / steps[1])
    return {"steps": list(steps), "errors": errors, "observed_order": order,
            "scale": float(np.max(np.abs(le)))}


# -- perturbations ----------------------------------------------------------


def random_perturbation(grid: GridSpec | None, rng: np.random.Generator, order: int = 4,
                        amplitude: float = 0.1, kmax: int = 1) -> Perturbation:
    """Random symmetric (4, 4) compactified perturbation, low Fourier modes.

    With ``grid`` None the perturbation is x-independent.
    """
    shape = grid.shape if grid is not None else (1, 1, 1)
    out = np.zeros((order + 1, 4, 4) + shape)
    for j in range(order + 1):
        for a in range(4):
            for b in range(a, 4):
                if grid is None:
                    val = np.full(shape, rng.normal())
                else:
                    modes = [(rng.integers(-kmax, kmax + 1, size=3), rng.normal(), rng.normal())]
                    val = fourier_field(grid, rng.normal(), modes)
                out[j, a, b] = out[j, b, a] = amplitude * val
    return Perturbation(Series(out))


def expansion_difference(first, second) -> Perturbation:
    """Compactified difference of two FG expansions, as a (4, 4) perturbation."""
    diff = first.g_t() - second.g_t()
    return Perturbation(embed_bulk(diff, 0))


def decay_diagnostic(pert: Perturbation, tol: float = 1e-12) -> dict:
    """Leading t-orders of the tangential block and of k(N, .) = k_0a."""
    if pert.center is not None:
        raise ValueError("decay orders refer to the compactified series in t")
    k = pert.k
    tangential = Series(k.coeffs[:, 1:, 1:], k.lo).leading_order(tol)
    normal = Series(k.coeffs[:, 0, :], k.lo).leading_order(tol)
    return {"tangential_order": tangential, "normal_order": normal,
            "valid_through": k.valid}


def check_fg_difference(report: dict, n: int = 3) -> None:
    """Orders required for the difference of two expansions with equal gamma."""
    if report["tangential_order"] < n:
        raise AssertionError(f"tangential leading order {report['tangential_order']} < {n}")
    if report["normal_order"] < n + 1:
        raise AssertionError(f"normal leading order {report['normal_order']} < {n + 1}")


__all__ = [
    "Perturbation", "check_fg_difference", "decay_diagnostic", "einstein_operator",
    "expansion_difference", "fd_check", "fd_linearization", "gauge_identity_residual",
    "gauged_operator", "jacobi_laplacian", "lie_derivative", "linearized_einstein",
    "random_perturbation", "slice_geometry", "to_slice",
    "trace_identity_residual",
]
