"""Closed-form reference metrics and their geodesic-gauge Taylor expansions.

* ``cusp``: dt^2 + delta, exact.
* ``cone``: dt^2 + (1 - t^2/4)^2 gamma, the compactified cone
  dr^2 + sinh^2 r gamma with t = 2 e^-r.
* ``ads_schwarzschild_planar``: dr^2/V + V dx1^2 + r^2 (dx2^2 + dx3^2),
  V = r^2 - 2m/r.  With w = 1/r the geodesic defining function is
  t = w exp(F(w)), F(w) = int_0^w ((1 - 2m u^3)^-1/2 - 1) du/u, and
  gbar = dt^2 + a(t) dx1^2 + b(t) (dx2^2 + dx3^2) with
  a = (t/w)^2 (1 - 2m w^3), b = (t/w)^2.

The expansions are produced by one-dimensional power-series arithmetic on
plain coefficient arrays, independent of the field engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import integrate, optimize

from .field import GridSpec, SymForm

REFERENCES = ("cusp", "cone", "ads_schwarzschild_planar")


# -- 1d truncated power series (coefficient arrays) ---------------------------


def ps_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    return np.convolve(a, b)[:n]


def ps_exp(a: np.ndarray) -> np.ndarray:
    """exp of a series with a[0] = 0, via e' = a' e."""
    if a[0] != 0:
        raise ValueError("ps_exp expects zero constant term")
    n = len(a)
    e = np.zeros(n)
    e[0] = 1.0
    da = np.arange(n) * a  # coefficients of t a'(t)
    for k in range(1, n):
        e[k] = np.dot(da[1:k + 1], e[k - 1::-1][:k]) / k
    return e


def ps_compose(f: np.ndarray, w: np.ndarray) -> np.ndarray:
    """f(w(t)) for w(0) = 0."""
    n = len(w)
    out = np.zeros(n)
    power = np.zeros(n)
    power[0] = 1.0
    for c in f[:n]:
        out += c * power
        power = ps_mul(power, w)
    return out


def ps_reciprocal(a: np.ndarray) -> np.ndarray:
    n = len(a)
    out = np.zeros(n)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1:k + 1], out[k - 1::-1][:k]) / a[0]
    return out


def ps_eval(a: np.ndarray, t):
    return np.polynomial.polynomial.polyval(t, a)


# -- AdS-Schwarzschild ------------------------------------------------------


def _f_series(m: float, n: int) -> np.ndarray:
    """F(w) = sum_j C(2j, j)/4^j (2m)^j w^(3j)/(3j) through w^(n-1)."""
    f = np.zeros(n)
    j = 1
    while 3 * j < n:
        f[3 * j] = comb(2 * j, j) / 4.0**j * (2 * m) ** j / (3 * j)
        j += 1
    return f


def ads_schwarzschild_profiles(m: float, order: int):
    """Taylor coefficients (through t^order) of a(t) and b(t)."""
    n = order + 1
    f = _f_series(m, n)
    t = np.zeros(n)
    if n > 1:
        t[1] = 1.0
    # fixed point w = t exp(-F(w)); each sweep fixes three more orders
    w = t.copy()
    for _ in range(order // 3 + 2):
        w = ps_mul(t, ps_exp(-ps_compose(f, w)))
    # t/w = exp(F(w)) exactly, so (t/w)^2 = exp(2 F(w))
    ratio2 = ps_exp(2.0 * ps_compose(f, w))
    w3 = ps_mul(ps_mul(w, w), w)
    a = ps_mul(ratio2, _one(n) - 2.0 * m * w3)
    return a, ratio2


def _one(n):
    e = np.zeros(n)
    e[0] = 1.0
    return e


def ads_schwarzschild_closed(m: float, t: float):
    """(a(t), b(t)) from quadrature and root finding, no series involved."""
    def big_f(w):
        if w == 0:
            return 0.0
        # ((1-x)^-1/2 - 1)/u rewritten without cancellation, x = 2 m u^3
        def integrand(u):
            r = np.sqrt(1 - 2 * m * u**3)
            return 2 * m * u * u / (r * (1 + r))
        val, _ = integrate.quad(integrand, 0, w, epsabs=1e-18, epsrel=1e-13, limit=200)
        return val

    if m == 0:
        w = t
    else:
        # w = t exp(-F(w)) < t; shrink the lower bracket until it brackets
        w_max = (1.0 / (2 * m)) ** (1.0 / 3.0)
        hi = min(t, w_max * (1 - 1e-9))
        lo = 0.5 * hi

        def g(w):
            return np.log(w) + big_f(w) - np.log(t)
        while g(lo) > 0:
            lo *= 0.5
        w = optimize.brentq(g, lo, hi, xtol=1e-17, rtol=1e-15)
    b = (t / w) ** 2
    return b * (1 - 2 * m * w**3), b


def warped_einstein_residual(profiles, t: float):
    """Einstein residual of t^-2 (dt^2 + sum a_i dx_i^2) for 1d profiles.

    With p_i = t a_i'/(2 a_i): E_t = 3 - sum(t p_i' + (1 - p_i)^2) and
    E_i = 3 - (t p_i' + (1 - p_i)(3 - sum p_j)); all vanish iff Ric = -3g.
    ``profiles`` are power-series coefficient arrays.
    """
    p, tdp = [], []
    for a in profiles:
        da = np.polynomial.polynomial.polyder(a)
        dda = np.polynomial.polynomial.polyder(da)
        av, dav, ddav = ps_eval(a, t), ps_eval(da, t), ps_eval(dda, t)
        pi = t * dav / (2 * av)
        # p' = a'/(2a) + t a''/(2a) - t a'^2/(2a^2)
        dpi = dav / (2 * av) + t * ddav / (2 * av) - t * dav**2 / (2 * av**2)
        p.append(pi)
        tdp.append(t * dpi)
    sp = sum(p)
    e_t = 3 - sum(tdp[i] + (1 - p[i]) ** 2 for i in range(len(p)))
    e_i = [3 - (tdp[i] + (1 - p[i]) * (3 - sp)) for i in range(len(p))]
    return np.array([e_t] + e_i)


# -- reference objects ------------------------------------------------------


@dataclass(frozen=True)
class Reference:
    name: str
    params: dict
    coefficients: list  # numpy (3, 3) matrices g_(0)..g_(K) for constant references
    gamma: np.ndarray

    def sampler(self, t: float) -> np.ndarray:
        """Closed-form tangential metric g_t at t (3x3, x-independent)."""
        if self.name == "cusp":
            return self.gamma.copy()
        if self.name == "cone":
            return (1 - t * t / 4) ** 2 * self.gamma
        a, b = ads_schwarzschild_closed(self.params["m"], t)
        return np.diag([a, b, b])

    def sectional_closed(self, t: float):
        """Closed-form (K_radial, K_tangential) of the AH cone metric at t."""
        if self.name != "cone":
            raise ValueError("closed-form sectional curvatures are known for the cone")
        coth = (1 + t * t / 4) / (1 - t * t / 4)
        return -1.0, -coth**2

    def forms(self, grid: GridSpec) -> list[SymForm]:
        return [SymForm.constant(grid, c) for c in self.coefficients]


def reference(name: str, params: dict | None = None, order: int = 8) -> Reference:
    params = dict(params or {})
    if name == "cusp":
        gamma = np.eye(3)
        coeffs = [gamma] + [np.zeros((3, 3)) for _ in range(order)]
    elif name == "cone":
        gamma = np.asarray(params.get("gamma", np.eye(3)), dtype=float)
        poly = np.zeros(max(order + 1, 5))
        poly[[0, 2, 4]] = [1.0, -0.5, 1.0 / 16.0]
        coeffs = [c * gamma for c in poly[:order + 1]]
    elif name == "ads_schwarzschild_planar":
        m = float(params.get("m", 0.5))
        if m < 0:
            raise ValueError("black-hole mass parameter must be >= 0")
        params["m"] = m
        a, b = ads_schwarzschild_profiles(m, order)
        gamma = np.eye(3)
        coeffs = [np.diag([a[k], b[k], b[k]]) for k in range(order + 1)]
    else:
        raise ValueError(f"unknown reference {name!r}; expected one of {REFERENCES}")
    return Reference(name, params, coeffs, gamma)
