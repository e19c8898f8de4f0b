"""Curvature of series-valued metrics.

Conventions (used everywhere in the package):

* R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, stored as
  R^a_{bcd} = (R(d_c, d_d) d_b)^a.
* Ric_{bd} = R^a_{bad};  s = g^{bd} Ric_{bd}.
* R_{abcd} = g_{ae} R^e_{bcd}; sectional curvature K(X,Y) = R(X,Y,X,Y)/|X^Y|^2,
  positive on round spheres.
* Laplacian Delta f = g^{ab} nabla_a nabla_b f, so D*D = -nabla^c nabla_c.
* delta h_b = -nabla^a h_{ab};  delta* w = sym(nabla w);
  beta(h) = delta h + 1/2 d tr h.
* Curvature action R(k)_{ab} = R_{acbd} k^{cd}.

A metric is a ``Series`` with (d, d) values.  For the 4-dimensional bulk,
index 0 is the t direction and is differentiated as a series; the others
are spectral x-derivatives.  For the boundary (d = 3) the metric is an
order-0 polynomial series and all indices are spatial.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import OrderMismatch
from .field import GridSpec, ScalarField, SymForm, pack_sym, unpack_sym
from .series import INF, Series, laurent_assert_regular, matrix_series_inverse

LETTERS = "abcdefghijklm"


def stack(parts: list[Series], axis: int = 0) -> Series:
    """Stack series into a new value axis, on the common order window."""
    lo = min(p.lo for p in parts)
    if all(p.exact for p in parts):
        top, exact = max(p.top for p in parts), True
    else:
        top, exact = int(min(p.valid for p in parts)), False
    arrays = [p.with_orders(lo, top).coeffs if p.top >= top or p.exact else
              p.truncate(top).coeffs for p in parts]
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    arrays = [np.broadcast_to(a, shape) for a in arrays]
    return Series(np.stack(arrays, axis=axis + 1), lo, exact)


def component(s: Series, *idx) -> Series:
    return Series(s.coeffs[(slice(None),) + idx], s.lo, s.exact)


def permute(s: Series, spec: str) -> Series:
    """Reorder value axes, e.g. ``permute(x, "abc->bac")``."""
    src, dst = spec.split("->")
    return s.map(lambda c: np.einsum(f"n{src}...->n{dst}...", c))


def symmetrize(s: Series) -> Series:
    return s.map(lambda c: 0.5 * (c + np.swapaxes(c, 1, 2)))


class Geometry:
    """Levi-Civita calculus for one series-valued metric."""

    def __init__(self, metric: Series, dim: int | None = None):
        vs = metric.value_shape
        if len(vs) != 2 or vs[0] != vs[1]:
            raise ValueError("metric must have square matrix values")
        self.metric = metric
        self.dim = dim or vs[0]
        self.bulk = self.dim == 4

    def partial(self, s: Series, a: int) -> Series:
        if self.bulk:
            return s.dt() if a == 0 else s.dx(a)
        return s.dx(a + 1)

    def gradient(self, s: Series) -> Series:
        """Stack of partial derivatives as a new leading value axis."""
        return stack([self.partial(s, a) for a in range(self.dim)])

    @cached_property
    def inverse(self) -> Series:
        m = self.metric
        top = None if m.exact and m.top == 0 else (m.top if not m.exact else None)
        return matrix_series_inverse(m, top=top)

    @cached_property
    def christoffel_lower(self) -> Series:
        """Gamma_{dbc} = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)."""
        dg = self.gradient(self.metric)  # [c, a, b] = d_c g_ab
        c = dg.coeffs
        low = 0.5 * (np.einsum("nbdc...->ndbc...", c) + np.einsum("ncdb...->ndbc...", c)
                     - c)
        return Series(low, dg.lo, dg.exact)

    @cached_property
    def christoffel(self) -> Series:
        """Gamma^a_{bc}."""
        return self.inverse.mul(self.christoffel_lower, "ad,dbc->abc")

    @cached_property
    def ricci(self) -> Series:
        gam = self.christoffel
        div = None
        for a in range(self.dim):
            term = self.partial(component(gam, a), a)  # [d, b]
            div = term if div is None else div + term
        trace = gam.map(lambda c: np.einsum("naab...->nb...", c))
        grad_tr = self.gradient(trace)  # [d, b] = d_d Gamma^a_ab
        quad = trace.mul(gam, "e,edb->db") - gam.mul(gam, "ade,eab->db")
        return symmetrize(div - grad_tr + quad)

    @cached_property
    def scalar(self) -> Series:
        return self.inverse.mul(self.ricci, "bd,bd->")

    @cached_property
    def riemann_up(self) -> Series:
        """R^a_{bcd}."""
        gam = self.christoffel
        dgam = self.gradient(gam)  # [c, a, d, b] = d_c Gamma^a_db
        q = permute(dgam, "cadb->abcd")
        p = gam.mul(gam, "ace,edb->abcd")
        return q - permute(q, "abcd->abdc") + p - permute(p, "abcd->abdc")

    @cached_property
    def riemann(self) -> Series:
        """R_{abcd} = g_ae R^e_bcd."""
        return self.metric.mul(self.riemann_up, "ae,ebcd->abcd")

    @cached_property
    def weyl(self) -> Series:
        n = self.dim
        g, ric, s = self.metric, self.ricci, self.scalar
        gr = g.mul(ric, "ac,bd->abcd")  # g_ac Ric_bd
        # Ric_ac g_bd + Ric_bd g_ac - Ric_ad g_bc - Ric_bc g_ad
        kn_ric = (gr + permute(gr, "badc->abcd") - permute(gr, "bacd->abcd")
                  - permute(gr, "abdc->abcd"))
        gg = g.mul(g, "ac,bd->abcd")
        kn_g = gg - permute(gg, "abdc->abcd")
        return self.riemann - kn_ric.scale(1.0 / (n - 2)) + kn_g.mul(s).scale(
            1.0 / ((n - 1) * (n - 2)))

    # -- covariant calculus -------------------------------------------

    def covariant_derivative(self, tensor: Series) -> Series:
        """(nabla T)_{e i1..ir} for a covariant tensor T (first index e)."""
        rank = len(tensor.value_shape)
        idx = LETTERS[:rank]
        out = self.gradient(tensor)
        gam = self.christoffel
        for slot in range(rank):
            src = idx[:slot] + "z" + idx[slot + 1:]
            spec = f"zy{idx[slot]},{src}->y{idx}"
            out = out - gam.mul(tensor, spec)
        return out

    def raise_pair(self, h: Series) -> Series:
        """h^{ab} = g^{ac} g^{bd} h_cd."""
        gi = self.inverse
        return gi.mul(gi.mul(h, "ac,cd->ad"), "bd,ad->ab")

    def trace(self, h: Series) -> Series:
        return self.inverse.mul(h, "ab,ab->")

    def divergence(self, h: Series) -> Series:
        """delta h_b = -g^{ac} nabla_c h_ab."""
        return -self.inverse.mul(self.covariant_derivative(h), "ac,cab->b")

    def differential(self, f: Series) -> Series:
        return self.gradient(f)

    def bianchi(self, h: Series) -> Series:
        """beta(h) = delta h + 1/2 d tr h."""
        return self.divergence(h) + self.gradient(self.trace(h)).scale(0.5)

    def delta_star(self, w: Series) -> Series:
        return symmetrize(self.covariant_derivative(w))

    def rough_laplacian(self, h: Series) -> Series:
        """D*D h = -g^{cd} nabla_c nabla_d h."""
        rank = len(h.value_shape)
        idx = LETTERS[2:2 + rank]
        nn = self.covariant_derivative(self.covariant_derivative(h))
        return -self.inverse.mul(nn, f"ab,ab{idx}->{idx}")

    def curvature_action(self, k: Series) -> Series:
        """R(k)_ab = R_acbd k^cd."""
        return self.riemann.mul(self.raise_pair(k), "acbd,cd->ab")

    def weyl_action(self, h: Series) -> Series:
        """W(h)_bc = W_bacd h^ad (the contraction used by the Bach tensor)."""
        return self.weyl.mul(self.raise_pair(h), "bacd,ad->bc")

    @cached_property
    def bach(self) -> Series:
        """delta d(Ric - s/6 g) - W(Ric) in four dimensions.

        d acts on P as a T*M-valued 1-form, C_abc = nabla_a P_bc - nabla_b P_ac,
        and delta C_bc = -nabla^a C_abc.  With W(h)_bc = W_bacd h^ad the
        Weyl term enters with a minus sign; the result is conformally
        invariant and vanishes on conformally Einstein metrics.
        """
        n = self.dim
        p = self.ricci - self.metric.mul(self.scalar).scale(1.0 / (2 * (n - 1)))
        dp = self.covariant_derivative(p)
        c = dp - permute(dp, "bac->abc")
        dc = -self.inverse.mul(self.covariant_derivative(c), "ea,eabc->bc")
        return symmetrize(dc - self.weyl_action(self.ricci))


# -- bulk metrics -----------------------------------------------------------


@dataclass(frozen=True)
class BulkMetric:
    """Geodesic-gauge compactified metric eps dt^2 + g_t."""

    signature: int
    g_t: Series  # (3, 3)-valued

    def __post_init__(self):
        if self.signature not in (1, -1):
            raise ValueError("signature must be +1 or -1")
        if self.g_t.value_shape != (3, 3) or self.g_t.lo != 0:
            raise ValueError("g_t must be a (3, 3)-valued power series")
        g0 = self.g_t.coeff(0)
        ev = np.linalg.eigvalsh(np.moveaxis(g0, (0, 1), (-2, -1)))[..., 0]
        if np.min(ev) <= 0:
            idx = np.unravel_index(np.argmin(ev), ev.shape)
            from .errors import NotPositiveDefinite
            raise NotPositiveDefinite(
                f"boundary metric not positive definite at {tuple(int(i) for i in idx)}",
                worst_point=tuple(int(i) for i in idx), value=float(ev[idx]))

    @property
    def order(self):
        return self.g_t.top

    def metric4(self) -> Series:
        return embed_bulk(self.g_t, self.signature)


def embed_bulk(g_t: Series, signature: int) -> Series:
    c = g_t.coeffs
    out = np.zeros((c.shape[0], 4, 4) + c.shape[3:])
    out[:, 1:, 1:] = c
    if g_t.lo <= 0 <= g_t.top:
        out[-g_t.lo, 0, 0] = signature
    return Series(out, g_t.lo, g_t.exact)


def curvature4(m) -> Geometry:
    """Curvature engine for a BulkMetric or any (4, 4)-valued metric series."""
    metric = m.metric4() if isinstance(m, BulkMetric) else m
    return Geometry(metric, 4)


def einstein_residual(m: BulkMetric, tol: float = 1e-12) -> Series:
    """E = t^2 (Ric_g + 3 eps g) for g = t^-2 (eps dt^2 + g_t).

    Uses the conformal-change identity with phi = -log t:
    Ric_g = Ric - 2(nabla d phi - d phi d phi) - (Delta phi + 2|d phi|^2) gbar.
    The product t*S is assembled as a Laurent series; its t^-1 part must
    cancel identically and is checked before the regular part is returned.
    """
    geo = curvature4(m)
    gbar = geo.metric
    eps = m.signature
    dphi = Series(np.array([-1.0, 0.0, 0.0, 0.0]).reshape(1, 4, 1, 1, 1), lo=-1, exact=True)
    hess = geo.gradient(dphi) - geo.christoffel.mul(dphi, "cab,c->ab")
    h = hess - dphi.mul(dphi, "a,b->ab")
    x = geo.inverse.mul(h + dphi.mul(dphi, "a,b->ab").scale(3.0), "ab,ab->")
    ts = (geo.ricci.shift(1) - h.shift(1).scale(2.0) - gbar.mul(x).shift(1)
          + gbar.shift(-1).scale(3.0 * eps))
    scale = max(1.0, gbar.sup_norms().get(0, 1.0))
    return laurent_assert_regular(ts, tol * scale).shift(1)


def slice_metric(gbar: Series, t0: float, top: int = 2) -> Series:
    """The AH metric t^-2 gbar as a series in tau = t - t0 around t0 > 0.

    ``gbar`` is read as the polynomial defined by its stored coefficients.
    """
    if t0 <= 0:
        raise ValueError("slice frame needs t0 > 0")
    poly = gbar.as_polynomial().recenter(t0, top).truncate(top)
    return poly.mul(Series.shifted_power(t0, -2.0, top)).truncate(top)


def einstein_residual_at(gbar: Series, t0: float, signature: int) -> np.ndarray:
    """Ric_g + 3 eps g of the truncated metric evaluated at t = t0."""
    g = slice_metric(gbar, t0)
    geo = Geometry(g, 4)
    return (geo.ricci + g.scale(3.0 * signature)).coeff(0)


def sectional_curvatures(geo: Geometry, planes, order: int = 0) -> np.ndarray:
    """K on each plane spanned by vector pairs (u, v), shape (len(planes), *grid)."""
    r = geo.riemann.coeff(order)
    g = geo.metric.coeff(order)
    out = []
    for u, v in planes:
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        num = np.einsum("abcd...,a,b,c,d->...", r, u, v, u, v)
        guu = np.einsum("ab...,a,b->...", g, u, u)
        gvv = np.einsum("ab...,a,b->...", g, v, v)
        guv = np.einsum("ab...,a,b->...", g, u, v)
        out.append(num / (guu * gvv - guv ** 2))
    return np.array(out)


def coordinate_planes(dim: int = 4):
    e = np.eye(dim)
    return [(e[a], e[b]) for a, b in combinations(range(dim), 2)]


def sample_planes(count: int, seed: int = 0, dim: int = 4):
    rng = np.random.default_rng(seed)
    return coordinate_planes(dim) + [tuple(rng.standard_normal((2, dim))) for _ in range(count)]


# -- boundary ---------------------------------------------------------------


@dataclass(frozen=True)
class Boundary3Curvature:
    ricci3: SymForm
    scalar3: ScalarField


def boundary_geometry(gamma: SymForm) -> Geometry:
    gamma.check_positive_definite()
    return Geometry(Series.constant(gamma.full()), 3)


def boundary_curvature(gamma: SymForm) -> Boundary3Curvature:
    geo = boundary_geometry(gamma)
    ric = geo.ricci.coeff(0)
    s = geo.scalar.coeff(0)
    return Boundary3Curvature(SymForm(gamma.grid, pack_sym(ric)), ScalarField(gamma.grid, s))


def contracted_bianchi(geo: Geometry, order: int | None = None):
    """delta Ric + 1/2 ds, which vanishes identically."""
    out = geo.divergence(geo.ricci) + geo.gradient(geo.scalar).scale(0.5)
    return out if order is None else out.coeff(order)


def sym_series(forms: list[SymForm]) -> Series:
    """Stack SymForms g_(0)..g_(K) into a (3, 3)-valued series."""
    return Series(np.stack([unpack_sym(f.comps) for f in forms]))


__all__ = [
    "BulkMetric", "Boundary3Curvature", "Geometry", "boundary_curvature",
    "boundary_geometry", "contracted_bianchi", "coordinate_planes", "curvature4",
    "einstein_residual", "einstein_residual_at", "embed_bulk", "permute", "sample_planes",
    "sectional_curvatures", "slice_metric", "stack", "sym_series", "INF", "OrderMismatch",
    "GridSpec",
]
