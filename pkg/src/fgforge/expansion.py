"""Fefferman-Graham expansion solver for four-dimensional AH Einstein metrics.

The compactified metric in geodesic gauge is gbar = eps dt^2 + g_t with
g_t = g_(0) + t^2 g_(2) + t^3 g_(3) + ...  The scaled Einstein residual
E = t^2 (Ric_g + 3 eps g), g = t^-2 gbar, has a t^k coefficient that is
affine in g_(k) with a linear part depending pointwise on g_(0) only.  Each
order is solved by probing that affine map and solving a 7x6 least-squares
system per grid point (the six tangential rows plus the 00 row).  The 0i
rows do not contain g_(k) and serve as consistency checks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintViolation, ResidualCheckFailure, SingularIndicial
from .field import SYM_INDEX, GridSpec, ScalarField, SymForm, fourier_field, pack_sym, unpack_sym
from .geometry import (BulkMetric, Geometry, boundary_curvature, boundary_geometry,
                       curvature4, einstein_residual, einstein_residual_at, sample_planes,
                       sectional_curvatures, slice_metric)
from .series import Series, matrix_series_inverse

log = logging.getLogger(__name__)

INDICIAL_THRESHOLD = 1e-8
AFFINITY_TOL = 1e-10
# internal consistency rows (0i rows, least-squares mismatch) see the
# aliasing floor of the grid, so they get a looser relative tolerance
CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class BoundaryData:
    gamma: SymForm
    sigma: SymForm
    order: int = 8
    tt_tol: float = 1e-10

    def __post_init__(self):
        if self.order < 3:
            raise ValueError("truncation order must be >= 3")
        if self.gamma.grid != self.sigma.grid:
            raise ValueError("gamma and sigma live on different grids")
        self.gamma.check_positive_definite()

    @property
    def grid(self) -> GridSpec:
        return self.gamma.grid


@dataclass
class FGExpansion:
    coeffs: list  # SymForm g_(0)..g_(K)
    signature: int = 1
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def grid(self) -> GridSpec:
        return self.coeffs[0].grid

    @property
    def gamma(self) -> SymForm:
        return self.coeffs[0]

    def g_t(self) -> Series:
        return _g_series([c.comps for c in self.coeffs])

    def bulk(self) -> BulkMetric:
        return BulkMetric(self.signature, self.g_t())

    def compactified(self) -> Series:
        return self.bulk().metric4()

    def residual(self) -> Series:
        return einstein_residual(self.bulk())


@dataclass
class SolveStep:
    """Pointwise affine map E_k = A_k g_(k) + b_k (7 rows, 6 unknowns)."""

    order: int
    matrix: np.ndarray  # (*grid, 7, 6)
    offset: np.ndarray  # (*grid, 7)
    mixed: np.ndarray  # (*grid, 3): 0i rows, independent of g_(k)
    singular: np.ndarray  # (*grid, 6) singular values

    @property
    def min_relative_singular(self) -> float:
        s = self.singular
        return float(np.min(s[..., -1] / s[..., 0]))


# -- helpers ----------------------------------------------------------------


def _g_series(comps_list) -> Series:
    return Series(np.stack([unpack_sym(np.asarray(c)) for c in comps_list]))


def _rows(e: np.ndarray) -> np.ndarray:
    """(4, 4, *grid) residual coefficient -> (*grid, 7): ij rows then 00."""
    rows = [e[1 + i, 1 + j] for i, j in SYM_INDEX] + [e[0, 0]]
    return np.moveaxis(np.array(rows), 0, -1)


def _mixed(e: np.ndarray) -> np.ndarray:
    return np.moveaxis(np.array([e[0, 1], e[0, 2], e[0, 3]]), 0, -1)


def _residual_coeff(comps_list, signature: int, k: int) -> np.ndarray:
    """t^k coefficient of E for g_t with the given coefficient list (top = k)."""
    e = einstein_residual(BulkMetric(signature, _g_series(comps_list)))
    return e.coeff(k)


def _basis(m: int, grid: GridSpec) -> np.ndarray:
    c = np.zeros((6,) + grid.shape)
    c[m] = 1.0
    return c


def random_symform(grid: GridSpec, rng: np.random.Generator, amplitude: float = 1.0,
                   kmax: int = 2) -> SymForm:
    """Band-limited random symmetric form (a few Fourier modes per component)."""
    comps = []
    for _ in range(6):
        modes = []
        for _ in range(3):
            k = rng.integers(-kmax, kmax + 1, size=3)
            modes.append((k, rng.normal(), rng.normal()))
        comps.append(fourier_field(grid, rng.normal(), modes))
    return SymForm(grid, amplitude * np.array(comps))


def random_boundary_metric(grid: GridSpec, rng: np.random.Generator, amplitude: float = 0.05,
                           n_modes: int = 2) -> SymForm:
    """delta plus a perturbation of sup norm ``amplitude`` built from unit
    axis wavevectors, which the default grids resolve to round-off."""
    comps = []
    for _ in range(6):
        modes = []
        for _ in range(n_modes):
            k = np.zeros(3, dtype=int)
            k[rng.integers(3)] = rng.choice([-1, 1])
            modes.append((k, rng.normal(), rng.normal()))
        comps.append(fourier_field(grid, 0.0, modes))
    c = np.array(comps)
    c *= amplitude / np.max(np.abs(c))
    return SymForm.identity(grid) + SymForm(grid, c)


# -- constraints ------------------------------------------------------------


def tt_norms(gamma: SymForm, sigma: SymForm) -> tuple[float, float]:
    """sup |tr_gamma sigma| and sup |delta_gamma sigma|."""
    geo = boundary_geometry(gamma)
    s = Series.constant(sigma.full())
    tr = geo.trace(s).coeff(0)
    div = geo.divergence(s).coeff(0)
    return float(np.max(np.abs(tr))), float(np.max(np.abs(div)))


def validate_tt(gamma: SymForm, sigma: SymForm, tt_tol: float = 1e-10) -> dict:
    trace_norm, div_norm = tt_norms(gamma, sigma)
    report = {"trace_norm": trace_norm, "divergence_norm": div_norm, "tt_tol": tt_tol}
    if trace_norm > tt_tol:
        raise ConstraintViolation(
            f"trace constraint violated: sup |tr_gamma sigma| = {trace_norm:.3e}",
            trace_norm, div_norm, "trace constraint")
    if div_norm > tt_tol:
        raise ConstraintViolation(
            f"divergence constraint violated: sup |delta_gamma sigma| = {div_norm:.3e}",
            trace_norm, div_norm, "divergence constraint")
    return report


# -- order-by-order solver --------------------------------------------------


def build_step(partial: list, k: int, signature: int = 1, check_affine: bool = True,
               seed: int = 0) -> SolveStep:
    """Probe the affine map of the t^k residual coefficient in g_(k).

    ``partial`` holds component arrays (6, *grid) for g_(0)..g_(k-1).
    """
    grid = GridSpec(partial[0].shape[-1])
    zero = np.zeros_like(partial[0])
    full = list(partial[:k]) + [zero]
    e0 = _residual_coeff(full, signature, k)
    offset = _rows(e0)
    mixed = _mixed(e0)
    # the linear part sees g_(0) only: probe the reduced metric g_(0) + t^k e_m
    reduced = [partial[0]] + [zero] * k
    base = _rows(_residual_coeff(reduced, signature, k))
    cols = []
    for m in range(6):
        probe = reduced[:k] + [_basis(m, grid)]
        cols.append(_rows(_residual_coeff(probe, signature, k)) - base)
    matrix = np.stack(cols, axis=-1)
    if check_affine:
        rng = np.random.default_rng(1000 + 31 * k + seed)
        for _ in range(2):
            h = random_symform(grid, rng).comps
            got = _rows(_residual_coeff(list(partial[:k]) + [h], signature, k)) - offset
            want = np.einsum("...ij,...j->...i", matrix, np.moveaxis(h, 0, -1))
            err = float(np.max(np.abs(got - want)))
            scale = max(1.0, float(np.max(np.abs(want))))
            if err > AFFINITY_TOL * scale:
                raise ResidualCheckFailure(
                    f"residual at order {k} is not affine in g_({k}) "
                    f"(deviation {err:.3e})", k, err)
    singular = np.linalg.svd(matrix, compute_uv=False)
    return SolveStep(k, matrix, offset, mixed, singular)


def solve_step(step: SolveStep) -> np.ndarray:
    """Least-squares solution of A_k g = -b_k per point, components (6, *grid)."""
    rel = step.min_relative_singular
    if rel < INDICIAL_THRESHOLD:
        raise SingularIndicial(step.order, rel)
    sol, *_ = _pointwise_lstsq(step.matrix, -step.offset)
    return np.moveaxis(sol, -1, 0)


def _pointwise_lstsq(a: np.ndarray, b: np.ndarray):
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    coef = np.einsum("...ji,...j->...i", u, b) / s
    x = np.einsum("...ji,...j->...i", vt, coef)
    res = np.einsum("...ij,...j->...i", a, x) - b
    return x, res


def range_complement(step: SolveStep, vector: np.ndarray | None = None) -> np.ndarray:
    """Component of b_k (or ``vector``) outside the numerical range of A_k."""
    b = step.offset if vector is None else vector
    u, s, _ = np.linalg.svd(step.matrix, full_matrices=False)
    keep = s > INDICIAL_THRESHOLD * s[..., :1]
    proj = np.einsum("...ji,...j->...i", u, b) * keep
    return b - np.einsum("...ij,...j->...i", u, proj)


def solve_order(partial: FGExpansion | list, k: int, signature: int | None = None) -> SymForm:
    """g_(k) from g_(0)..g_(k-1); raises SingularIndicial at the indicial root."""
    if isinstance(partial, FGExpansion):
        comps = [c.comps for c in partial.coeffs]
        signature = partial.signature if signature is None else signature
        grid = partial.grid
    else:
        comps = [c.comps if isinstance(c, SymForm) else np.asarray(c) for c in partial]
        grid = GridSpec(comps[0].shape[-1])
    if k < 2 or len(comps) < k:
        raise ValueError(f"solve_order needs k >= 2 and coefficients below {k}")
    step = build_step(comps, k, signature or 1)
    return SymForm(grid, solve_step(step))


def _scale(*arrays) -> float:
    return max([1.0] + [float(np.max(np.abs(a))) for a in arrays])


def _solve_from(comps: list, start: int, order: int, signature: int, tol: float,
                diag: dict, check_affine: bool = True) -> list:
    """Solve orders start..order in place (k = 3 must already be present)."""
    worst = diag.setdefault("consistency", {})
    for k in range(start, order + 1):
        if k == 3:
            continue
        step = build_step(comps, k, signature, check_affine)
        scale = _scale(step.offset, *comps)
        mixed = float(np.max(np.abs(step.mixed)))
        worst[f"mixed_rows_{k}"] = mixed
        if mixed > tol * scale:
            if k == 4:
                raise ConstraintViolation(
                    f"divergence obstruction at order 4: {mixed:.3e}", 0.0, mixed,
                    "divergence constraint")
            raise ResidualCheckFailure(f"0i residual rows at order {k} = {mixed:.3e}", k, mixed)
        gk = solve_step(step)
        _, res = _pointwise_lstsq(step.matrix, -step.offset)
        lsq = float(np.max(np.abs(res)))
        worst[f"lstsq_mismatch_{k}"] = lsq
        if lsq > tol * scale:
            raise ResidualCheckFailure(
                f"order {k} system inconsistent (least-squares residual {lsq:.3e}); "
                f"the grid may be too coarse for the data", k, lsq)
        diag.setdefault("min_relative_singular", {})[k] = step.min_relative_singular
        if len(comps) > k:
            comps[k] = gk
        else:
            comps.append(gk)
    return comps


def _k3_step(comps: list, sigma: np.ndarray, signature: int, tol: float, tt_tol: float,
             diag: dict):
    """Consistency of the indicial order and insertion of sigma."""
    step = build_step(comps, 3, signature, check_affine=False)
    rel = step.min_relative_singular
    diag["indicial_k3_relative_singular"] = rel
    if rel >= INDICIAL_THRESHOLD:
        raise ResidualCheckFailure("order 3 is not indicial (unexpected)", 3, rel)
    obstruction = float(np.max(np.abs(range_complement(step))))
    diag["k3_obstruction_norm"] = obstruction
    # A_3 has rank one with range spanned by A_3 gamma; read tr sigma off it
    v = np.einsum("...ij,...j->...i", step.matrix, np.moveaxis(comps[0], 0, -1)) / 3.0
    a_sigma = np.einsum("...ij,...j->...i", step.matrix, np.moveaxis(sigma, 0, -1))
    trace_est = np.sum(a_sigma * v, axis=-1) / np.sum(v * v, axis=-1)
    trace_norm = float(np.max(np.abs(trace_est)))
    diag["k3_trace_obstruction"] = trace_norm
    if obstruction > tol * _scale(step.offset, *comps):
        raise ConstraintViolation(
            f"order-3 obstruction {obstruction:.3e} is not in the range of the indicial map",
            trace_norm, 0.0, "indicial obstruction")
    if trace_norm > tt_tol:
        raise ConstraintViolation(
            f"trace constraint violated at order 3: |tr sigma| ~ {trace_norm:.3e}",
            trace_norm, 0.0, "trace constraint")
    if len(comps) > 3:
        comps[3] = sigma
    else:
        comps.append(sigma)


def expand(data: BoundaryData, residual_tol: float = 1e-9, check_tt: bool = True,
           check_affine: bool = True, consistency_tol: float = CONSISTENCY_TOL) -> FGExpansion:
    """Truncated FG expansion of the Einstein metric with data (gamma, sigma)."""
    diag: dict = {}
    if check_tt:
        diag["tt"] = validate_tt(data.gamma, data.sigma, data.tt_tol)
    comps = [data.gamma.comps, np.zeros_like(data.gamma.comps)]
    _solve_from(comps, 2, 2, 1, consistency_tol, diag, check_affine)
    _k3_step(comps, data.sigma.comps, 1, consistency_tol, data.tt_tol, diag)
    _solve_from(comps, 4, data.order, 1, consistency_tol, diag, check_affine)
    exp = FGExpansion([SymForm(data.grid, c) for c in comps], 1, diag)
    audit_residual(exp, residual_tol)
    diag["g2_formula_resolution"] = g2_formula_resolution(data.gamma, exp.coeffs[2])
    return exp


def audit_residual(exp: FGExpansion, tol: float = 1e-9, through: int | None = None) -> dict:
    """Per-order residual norms; raises if an order <= ``through`` (K-3) fails."""
    through = exp.order - 3 if through is None else through
    e = exp.residual()
    norms = {int(k): v for k, v in e.sup_norms().items()}
    scale = _scale(*[c.comps for c in exp.coeffs])
    exp.diagnostics["residual_norms"] = norms
    clean = [k for k in range(exp.order + 1) if norms.get(k, 0.0) <= tol * scale]
    first_bad = next((k for k in range(exp.order + 1) if k not in clean), exp.order + 1)
    exp.diagnostics["residual_clean_through"] = first_bad - 1
    if first_bad <= through:
        raise ResidualCheckFailure(
            f"Einstein residual at order {first_bad} is {norms[first_bad]:.3e}", first_bad,
            norms[first_bad])
    return norms


def _log2_slope(ts, norms) -> float:
    return float(np.polyfit(np.log2(ts), np.log2(norms), 1)[0])


def residual_order_fit(exp: FGExpansion, ts=(0.1, 0.05, 0.025), extra: int = 8,
                       floor: float = 0.0) -> dict:
    """Fitted power of t in the sup norm of Ric_g + 3 eps g at the given t.

    The truncated metric is padded with zero coefficients and its scaled
    residual E = t^2 (Ric_g + 3 eps g) is expanded through order K + extra
    by the exactly cancelling series route, then summed at each t.  This
    avoids the t^-2 round-off of evaluating Ric_g directly at small t.
    Norms at or below ``floor`` count as exact zeros.
    """
    gt = exp.g_t()
    pad = np.zeros((extra,) + gt.coeffs.shape[1:])
    padded = Series(np.concatenate([gt.coeffs, pad]))
    e = einstein_residual(BulkMetric(exp.signature, padded))
    norms = [float(np.max(np.abs(e.evaluate(t)))) / t**2 for t in ts]
    tail = float(np.max(np.abs(e.coeff(e.top)))) * max(ts) ** (e.top - 2)
    out = {"t": list(ts), "norms": norms, "tail_bound": tail}
    if max(norms) <= floor:
        return {**out, "order": None, "exact": True}
    return {**out, "order": _log2_slope(ts, norms), "exact": False}


def curvature_decay_fit(exp: FGExpansion, ts=(0.1, 0.05), n_random: int = 4, seed: int = 0,
                        floor: float = 1e-11) -> dict:
    """sup over planes of |K_g - K_target| at each t, and its log2 ratio.

    K_target = -1 (Riemannian) or +1 (Lorentzian).  Planes are the six
    coordinate planes plus ``n_random`` seeded ones.
    """
    gbar = exp.compactified()
    planes = sample_planes(n_random, seed)
    target = -float(exp.signature)
    devs = []
    for t in ts:
        geo = Geometry(slice_metric(gbar, t), 4)
        k = sectional_curvatures(geo, planes)
        devs.append(float(np.max(np.abs(k - target))))
    if max(devs) <= floor:
        return {"t": list(ts), "deviation": devs, "order": None, "exact": True}
    return {"t": list(ts), "deviation": devs, "order": _log2_slope(ts, devs), "exact": False}


def bach_norms(exp: FGExpansion) -> dict:
    """Per-order sup norms of the Bach tensor of the compactified metric."""
    bach = curvature4(exp.bulk()).bach
    return {int(k): v for k, v in bach.sup_norms().items()}


# -- g_(2) ------------------------------------------------------------------


def g2_readings(gamma: SymForm) -> dict:
    """Candidate closed forms for g_(2) built from Ric_gamma and s_gamma."""
    curv = boundary_curvature(gamma)
    schouten_like = curv.ricci3.comps - 0.25 * curv.scalar3.values * gamma.comps
    return {
        "printed_taylor": -0.5 * schouten_like,
        "printed_second_derivative": -0.25 * schouten_like,
        "recursion_closed_form": -1.0 * schouten_like,
    }


def compute_g2(gamma: SymForm, check_affine: bool = True) -> SymForm:
    """g_(2) from the order-2 recursion (not from a printed formula)."""
    comps = [gamma.comps, np.zeros_like(gamma.comps)]
    step = build_step(comps, 2, 1, check_affine)
    return SymForm(gamma.grid, solve_step(step))


def _probe_gamma(grid: GridSpec) -> SymForm:
    x = grid.coords()
    conf = np.exp(2 * 0.1 * np.cos(x[0]))
    return SymForm(grid, pack_sym(conf * np.eye(3)[:, :, None, None, None]))


def g2_formula_resolution(gamma: SymForm, g2: SymForm | None = None) -> dict:
    """Compare the recursion's g_(2) with the printed readings.

    On a flat gamma every reading agrees, so a fixed conformally flat probe
    metric is used instead to make the comparison informative.
    """
    probe = False
    if boundary_curvature(gamma).ricci3.sup_norm() < 1e-12:
        gamma = _probe_gamma(gamma.grid)
        g2 = None
        probe = True
    if g2 is None:
        g2 = compute_g2(gamma)
    scale = max(g2.sup_norm(), 1e-300)
    disc = {name: float(np.max(np.abs(val - g2.comps))) / scale
            for name, val in g2_readings(gamma).items()}
    match = [n for n, d in disc.items() if n.startswith("printed") and d < 1e-8]
    return {
        "recursion_matches": "recursion_closed_form" if disc["recursion_closed_form"] < 1e-8
        else None,
        "matching_printed_reading": match[0] if match else "none",
        "relative_discrepancy": disc,
        "winning_formula": "g2 = -(Ric_gamma - (s_gamma/4) gamma)",
        "probe_gamma_used": probe,
    }


# -- boundary identities ----------------------------------------------------


def boundary_identities_check(exp: FGExpansion) -> dict:
    """Curvature of gbar at t = 0 against the boundary identities (H = 0)."""
    gt = exp.g_t().truncate(min(exp.order, 2))
    geo = Geometry(BulkMetric(exp.signature, gt).metric4(), 4)
    ric = geo.ricci.coeff(0)
    s = geo.scalar.coeff(0)
    curv = boundary_curvature(exp.gamma)
    ric_g = curv.ricci3.full()
    s_g = curv.scalar3.values
    gam = exp.gamma.full()
    ric_ij = ric[1:, 1:]
    printed = 2 * ric_g + (s - 1.5 * s_g) / 6.0 * gam
    geodesic = 2 * ric_g - s / 6.0 * gam
    return {
        "printed_ricci_identity": float(np.max(np.abs(ric_ij - printed))),
        "geodesic_ricci_identity": float(np.max(np.abs(ric_ij - geodesic))),
        "scalar_relation": float(np.max(np.abs(s - 1.5 * s_g))),
        "mixed_identity": float(np.max(np.abs(ric[0, 1:]))),
        "mean_curvature": float(np.max(np.abs(exp.coeffs[1].comps))),
    }


# -- Wick rotation ----------------------------------------------------------


def wick_sign(k: int) -> int:
    return -1 if (k // 2) % 2 else 1


def wick_rotate(exp: FGExpansion, residual_tol: float = 1e-9, repair: bool = True,
                consistency_tol: float = CONSISTENCY_TOL) -> FGExpansion:
    """Lorentzian expansion with coefficients mu_k g_(k), mu_k = (-1)^floor(k/2).

    Every order is re-validated against Ric = 3g.  Orders where the sign rule
    does not hold (it fails once products of sigma appear) are re-solved with
    eps = -1 from the validated lower coefficients when ``repair`` is set;
    with ``repair=False`` such an order raises ResidualCheckFailure.
    """
    if exp.signature != 1:
        raise ValueError("wick_rotate expects a Riemannian expansion")
    order = exp.order
    comps = [wick_sign(k) * c.comps for k, c in enumerate(exp.coeffs)]
    e = einstein_residual(BulkMetric(-1, _g_series(comps)))
    scale = _scale(*comps)
    norms = {int(k): v for k, v in e.sup_norms().items()}
    failed = sorted(k for k, v in norms.items() if v > consistency_tol * scale)
    diag = {"sign_pattern": {k: wick_sign(k) for k in range(order + 1)},
            "sign_rule_residual": norms, "sign_rule_failed_orders": failed,
            "repaired_orders": []}
    if failed:
        first = failed[0]
        if not repair or first <= 3:
            raise ResidualCheckFailure(
                f"sign rule fails: Lorentzian residual at order {first} is "
                f"{norms[first]:.3e}", first, norms[first])
        rule = [c.copy() for c in comps]
        comps = comps[:first]
        _solve_from(comps, first, order, -1, consistency_tol, diag)
        diag["repaired_orders"] = [
            k for k in range(first, order + 1)
            if np.max(np.abs(comps[k] - rule[k])) > consistency_tol * scale]
    out = FGExpansion([SymForm(exp.grid, c) for c in comps], -1, diag)
    e = out.residual()
    diag["lorentzian_residual"] = {int(k): v for k, v in e.sup_norms().items()}
    bad = [k for k, v in diag["lorentzian_residual"].items()
           if k <= order - 3 and v > residual_tol * scale]
    if bad:
        k = bad[0]
        raise ResidualCheckFailure(f"Lorentzian residual at order {k} fails", k,
                                   diag["lorentzian_residual"][k])
    return out


# -- geodesic normalization -------------------------------------------------


def _scalar_matrix(s: Series) -> Series:
    return s.map(lambda c: c[:, None, None])


def geodesic_normalize(g_t: Series, u: Series, tol: float = 1e-10,
                       report: dict | None = None) -> Series:
    """Re-gauge the compactification u^2 (dt^2 + g_t) to geodesic form.

    Solves |d(t u w)|^2 = w^2 in the metric u^2 (dt^2 + g_t) order by order
    for w (the new defining function is t_hat = t u w), then returns the
    tangential metric (u w)^2 g_t of t_hat^2 g.  The boundary metric is
    unchanged, so the solution has u w = 1 through the truncation order and
    t_hat = t; the returned series is checked against that.
    """
    if u.lo != 0 or np.max(np.abs(u.coeff(0) - 1.0)) > tol:
        raise ValueError("the conformal factor must have leading coefficient 1")
    order = g_t.top
    u = u.truncate(order) if not u.exact else u.with_orders(0, order).truncate(order)
    rep = report if report is not None else {}
    if all(np.max(np.abs(u.coeff(k))) == 0 for k in range(1, order + 1)) and \
            np.all(u.coeff(0) == 1.0):
        rep.update({"omega_orders": {}, "eikonal_residual": {k: 0.0 for k in range(order + 1)},
                    "indicial": {}})
        return g_t
    grid_shape = g_t.grid_shape
    ginv = matrix_series_inverse(g_t)
    u_full = Series(np.broadcast_to(u.coeffs, (u.n,) + grid_shape).copy())

    def eikonal(omega: Series) -> Series:
        v = u_full.mul(omega)
        f = v.shift(1)
        ft = f.dt()
        grad = Series(np.stack([f.dx(a).coeffs for a in (1, 2, 3)], axis=1), f.lo)
        q = ginv.mul(grad, "ij,j->i").mul(grad, "i,i->")
        # u^2 (|d f|^2_uhat - w^2) = f_t^2 + |d_x f|^2_g - v^2
        return (ft.mul(ft) + q - v.mul(v)).truncate(order)

    coeffs = np.zeros((order + 1,) + grid_shape)
    coeffs[0] = 1.0
    indicial = {}
    for k in range(1, order + 1):
        trial = Series(coeffs.copy())
        r0 = eikonal(trial).coeff(k)
        probe = coeffs.copy()
        probe[k] = 1.0
        alpha = eikonal(Series(probe)).coeff(k) - r0
        indicial[k] = float(np.mean(alpha))
        coeffs[k] = -r0 / alpha
    omega = Series(coeffs)
    res = eikonal(omega)
    # |d t_hat|^2 - 1 in t_hat^2 g equals (u^2 F) / (u w)^2
    v = u_full.mul(omega)
    vinv = matrix_series_inverse(_scalar_matrix(v.mul(v)))
    eik = _scalar_matrix(res).mul(vinv, "ab,bc->ac").map(lambda c: c[:, 0, 0])
    rep["eikonal_residual"] = {int(k): x for k, x in eik.sup_norms().items()}
    rep["indicial"] = indicial
    rep["omega_orders"] = {int(k): x for k, x in omega.sup_norms().items()}
    dev = {int(k): x for k, x in v.sup_norms().items() if k >= 1}
    rep["t_hat_over_t_minus_one"] = dev
    if any(x > tol * _scale(*v.coeffs) for x in dev.values()):
        raise ResidualCheckFailure("normalized defining function differs from t", 0,
                                   max(dev.values()))
    out = v.mul(v).mul(g_t)
    return out.truncate(order)


def conformal_series(values, grid: GridSpec | None = None) -> Series:
    """Scalar series from a list of numbers or (n, n, n) arrays."""
    arrs = []
    for v in values:
        a = np.asarray(v, dtype=float)
        arrs.append(a.reshape(1, 1, 1) if a.ndim == 0 else a)
    shape = np.broadcast_shapes(*(a.shape for a in arrs))
    if grid is not None:
        shape = grid.shape
    return Series(np.stack([np.broadcast_to(a, shape) for a in arrs]))


def scalar_field(grid: GridSpec, values) -> ScalarField:
    return ScalarField(grid, values)
