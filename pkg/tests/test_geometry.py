import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ads_background, cusp_background
from fgforge.errors import NotPositiveDefinite
from fgforge.expansion import FGExpansion
from fgforge.field import GridSpec, SymForm, pack_sym
from fgforge.geometry import (BulkMetric, Geometry, boundary_curvature, boundary_geometry,
                              contracted_bianchi, coordinate_planes, curvature4,
                              einstein_residual, sectional_curvatures, slice_metric,
                              sym_series)
from fgforge.reference import reference
from fgforge.series import Series

# gbar = dt^2 + delta + t A(x) + t^2 B(x) with closed-form A, B


def _a(x):
    c1, s2 = np.cos(x[0]), np.sin(x[1])
    z = 0.0 * c1
    return 0.1 * np.array([[c1, 0.5 * s2, z], [0.5 * s2, -c1, 0.2 * c1], [z, 0.2 * c1, s2]])


def _b(x):
    c3, s1 = np.cos(x[2]), np.sin(x[0])
    z = 0.0 * c3
    return 0.1 * np.array([[s1, z, 0.3 * c3], [z, c3, z], [0.3 * c3, z, s1 - c3]])


def closed_metric(t, x):
    g = np.zeros((4, 4))
    g[0, 0] = 1.0
    g[1:, 1:] = np.eye(3) + t * _a(x) + t * t * _b(x)
    return g


def engine_metric(grid: GridSpec) -> Series:
    x = grid.coords()
    a, b = _a(x), _b(x)
    g_t = Series(np.stack([np.eye(3)[:, :, None, None, None] * np.ones(grid.shape), a, b]),
                 exact=True)
    return BulkMetric(1, g_t).metric4()


def fd_ricci(t, x, h):
    """Ricci of closed_metric by nested central differences."""
    def point(dt=0.0, dx=(0.0, 0.0, 0.0)):
        return closed_metric(t + dt, np.asarray(x) + np.asarray(dx))

    def shifted(a, s):
        d = np.zeros(4)
        d[a] = s
        return d

    def dmetric(p):
        out = np.zeros((4, 4, 4))
        for c in range(4):
            up = p + shifted(c, h)
            dn = p - shifted(c, h)
            out[c] = (point(up[0], up[1:]) - point(dn[0], dn[1:])) / (2 * h)
        return out

    def gamma(p):
        g = point(p[0], p[1:])
        dg = dmetric(p)  # [c, a, b]
        low = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
        return np.einsum("ad,dbc->abc", np.linalg.inv(g), low)

    p0 = np.array([0.0, 0.0, 0.0, 0.0])
    gam = gamma(p0)
    dgam = np.zeros((4, 4, 4, 4))
    for c in range(4):
        dgam[c] = (gamma(p0 + shifted(c, h)) - gamma(p0 - shifted(c, h))) / (2 * h)
    div = np.einsum("aabd->bd", dgam)
    grad_tr = np.einsum("daab->db", dgam)
    quad = np.einsum("aae,ebd->bd", gam, gam) - np.einsum("ade,eab->db", gam, gam)
    return div - grad_tr + quad


def test_ricci_matches_finite_difference_oracle():
    grid = GridSpec(8)
    t0 = 0.3
    geo = Geometry(engine_metric(grid).as_polynomial().recenter(t0, 2).truncate(2), 4)
    ric = geo.ricci.coeff(0)
    idx = (2, 5, 3)
    x = grid.axis[list(idx)]
    engine = ric[(slice(None), slice(None)) + idx]
    errs = [np.max(np.abs(fd_ricci(t0, x, h) - engine)) for h in (0.02, 0.01)]
    assert errs[1] < 1e-4
    assert 3.5 < errs[0] / errs[1] < 4.5


def _random_geometry():
    """Compactified test metric around t = 0.3; 16 points resolve its inverse."""
    gbar = engine_metric(GridSpec(16)).as_polynomial().recenter(0.3, 3).truncate(3)
    return Geometry(gbar, 4)


def test_flat_metric_has_no_curvature():
    geo = Geometry(Series.constant(np.eye(4)[..., None, None, None] * np.ones((8, 8, 8))), 4)
    assert geo.ricci.sup_norm() == 0.0
    assert geo.scalar.sup_norm() == 0.0


def test_riemann_symmetries():
    geo = _random_geometry()
    r = geo.riemann.coeff(0)
    scale = np.max(np.abs(r))
    assert scale > 1e-3
    assert np.max(np.abs(r + np.swapaxes(r, 0, 1))) <= 1e-11 * scale
    assert np.max(np.abs(r + np.swapaxes(r, 2, 3))) <= 1e-11 * scale
    assert np.max(np.abs(r - np.einsum("abcd...->cdab...", r))) <= 1e-11 * scale
    cyclic = r + np.einsum("abcd...->acdb...", r) + np.einsum("abcd...->adbc...", r)
    assert np.max(np.abs(cyclic)) <= 1e-11 * scale


def test_ricci_is_trace_of_riemann():
    geo = _random_geometry()
    r = geo.riemann_up.coeff(0)
    assert np.max(np.abs(np.einsum("abad...->bd...", r) - geo.ricci.coeff(0))) <= 1e-11


def test_weyl_is_traceless():
    geo = _random_geometry()
    w = geo.weyl.coeff(0)
    gi = geo.inverse.coeff(0)
    assert np.max(np.abs(w)) > 1e-3
    assert np.max(np.abs(np.einsum("ac...,abcd...->bd...", gi, w))) <= 1e-10


def test_weyl_vanishes_for_conformally_flat_metric():
    grid = GridSpec(8)
    x = grid.coords()
    conf = np.exp(0.2 * np.cos(x[0]) + 0.1 * np.sin(x[2]))
    g = Series.constant(np.eye(4)[..., None, None, None] * conf)
    geo = Geometry(g, 4)
    assert geo.riemann.sup_norm() > 1e-2
    assert geo.weyl.sup_norm() <= 1e-12


def test_contracted_bianchi():
    geo = _random_geometry()
    assert np.max(np.abs(contracted_bianchi(geo, 0))) <= 1e-10


def test_divergence_of_scaled_metric():
    gamma = boundary_metric_conformal(GridSpec(32))
    geo = boundary_geometry(gamma)
    x = gamma.grid.coords()
    f = Series.constant(np.sin(x[0]) + 0.5 * np.cos(x[1] + x[2]))
    fg = geo.metric.mul(f)
    lhs = geo.divergence(fg).coeff(0)
    rhs = -geo.differential(f).coeff(0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-11


def test_bianchi_operator_kills_metric():
    geo = _random_geometry()
    assert geo.bianchi(geo.metric).sup_norm() <= 1e-11


def test_covariant_derivative_of_metric_vanishes():
    geo = _random_geometry()
    assert np.max(np.abs(geo.covariant_derivative(geo.metric).coeff(0))) <= 1e-11


# -- boundary curvature against the conformally flat closed form ------------


def _psi(x):
    return 0.1 * np.cos(x[0]) + 0.05 * np.sin(x[1])


def boundary_metric_conformal(grid: GridSpec) -> SymForm:
    conf = np.exp(2 * _psi(grid.coords()))
    return SymForm(grid, pack_sym(conf * np.eye(3)[:, :, None, None, None]))


def test_boundary_curvature_conformally_flat():
    grid = GridSpec(32)
    x = grid.coords()
    dpsi = np.array([-0.1 * np.sin(x[0]), 0.05 * np.cos(x[1]), np.zeros(grid.shape)])
    hess = np.zeros((3, 3) + grid.shape)
    hess[0, 0] = -0.1 * np.cos(x[0])
    hess[1, 1] = -0.05 * np.sin(x[1])
    lap = hess[0, 0] + hess[1, 1]
    grad2 = np.sum(dpsi**2, axis=0)
    # e^(2 psi) delta in dimension 3
    ric = -(hess - np.einsum("i...,j...->ij...", dpsi, dpsi)) \
        - (lap + grad2) * np.eye(3)[:, :, None, None, None]
    s = np.exp(-2 * _psi(x)) * (-4 * lap - 2 * grad2)
    curv = boundary_curvature(boundary_metric_conformal(grid))
    assert np.max(np.abs(curv.ricci3.full() - ric)) <= 1e-12
    assert np.max(np.abs(curv.scalar3.values - s)) <= 1e-12


def test_boundary_curvature_of_constant_metric():
    gamma = SymForm.constant(GridSpec(8), [[2.0, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 1.5]])
    curv = boundary_curvature(gamma)
    assert curv.ricci3.sup_norm() == 0.0 and curv.scalar3.sup_norm() == 0.0


def test_boundary_curvature_rejects_indefinite_metric():
    gamma = SymForm.constant(GridSpec(8), np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(NotPositiveDefinite):
        boundary_curvature(gamma)


# -- Einstein residual ------------------------------------------------------


def test_cusp_residual_vanishes():
    e = einstein_residual(cusp_background(GridSpec(8), 8))
    assert e.sup_norm() <= 1e-12


def test_ads_residual_vanishes_through_order():
    e = einstein_residual(ads_background(GridSpec(8), 10))
    assert max(v for k, v in e.sup_norms().items()) <= 1e-12


def test_corrupted_g2_shows_up_at_order_two():
    grid = GridSpec(8)
    forms = reference("cusp", order=6).forms(grid)
    forms[2] = SymForm.constant(grid, 0.1 * np.eye(3))
    norms = einstein_residual(BulkMetric(1, sym_series(forms))).sup_norms()
    assert norms.get(0, 0.0) <= 1e-14 and norms.get(1, 0.0) <= 1e-14
    assert norms[2] >= 1e-3


def test_residual_rejects_bad_boundary_metric():
    g_t = Series.constant(np.diag([1.0, -1.0, 1.0])[..., None, None, None])
    with pytest.raises(NotPositiveDefinite):
        BulkMetric(1, g_t)


# -- sectional curvature of the cone --------------------------------------


@pytest.mark.parametrize("t0", [0.2, 0.4])
def test_cone_sectional_curvatures(t0):
    ref = reference("cone", order=4)
    gbar = BulkMetric(1, sym_series(ref.forms(GridSpec(8)))).metric4()
    geo = Geometry(slice_metric(gbar, t0), 4)
    k = sectional_curvatures(geo, coordinate_planes())
    radial, tangential = ref.sectional_closed(t0)
    assert np.max(np.abs(k[:3] - radial)) <= 1e-9
    assert np.max(np.abs(k[3:] - tangential)) <= 1e-9


# -- Bach -----------------------------------------------------------------


def _x_independent(series_coeffs):
    return Series(np.asarray(series_coeffs)[..., None, None, None])


def _ads_compactified(order):
    ref = reference("ads_schwarzschild_planar", {"m": 0.5}, order)
    g_t = _x_independent(np.stack(ref.coefficients))
    return BulkMetric(1, g_t).metric4()


def test_bach_of_cusp():
    bach = curvature4(cusp_background(GridSpec(8), 8)).bach
    assert bach.sup_norm() <= 1e-10


def test_bach_of_conformally_rescaled_cusp():
    gbar = cusp_background(GridSpec(8), 8).metric4()
    phi2 = Series.scalar([1.0, 0.2, 0.01], exact=True)
    bach = Geometry(gbar.mul(phi2), 4).bach
    assert bach.sup_norm() <= 1e-9


def test_bach_of_ads_schwarzschild():
    bach = Geometry(_ads_compactified(12), 4).bach
    assert bach.sup_norm() <= 1e-10


def test_bach_detects_non_einstein_metric():
    grid = GridSpec(8)
    bach = Geometry(engine_metric(grid).truncate(6), 4).bach
    assert bach.sup_norm() >= 1e-3


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_bach_conformal_stability(a, b, c):
    """Bach of phi^2 gbar stays at the round-off level of the Einstein seed."""
    gbar = _ads_compactified(10)
    phi = Series.scalar([1.0, a, b, c], exact=True)
    phi2 = phi.mul(phi)
    seed = Geometry(gbar, 4).bach.sup_norm()
    assert Geometry(gbar.mul(phi2), 4).bach.sup_norm() <= 10 * seed + 1e-9


def test_einstein_residual_of_stored_expansion(cusp_expansion):
    assert isinstance(cusp_expansion, FGExpansion)
    assert cusp_expansion.residual().sup_norm() <= 1e-12
