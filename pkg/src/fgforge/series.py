"""Truncated power and Laurent series in t with field-valued coefficients.

A ``Series`` stores coefficients of t^lo .. t^top in one array of shape
``(n, *value_shape, *grid)``.  The grid part is either ``(N, N, N)`` or the
broadcastable ``(1, 1, 1)`` for x-independent coefficients.

Two kinds of truncation are tracked:

* ``exact=False``: coefficients above ``top`` are unknown.  Arithmetic
  propagates the order to which results are still known.
* ``exact=True``: the series is a polynomial; coefficients above ``top``
  are zero (used for t^p shifts, constants and closed-form polynomials).

The lowest admissible order is t^-2 (see ``LAURENT_FLOOR``); any operation
that would produce a deeper pole raises, since the only singular factor in
the engine is the conformal weight t^-2.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CancellationFailure, OrderMismatch, SingularMetric
from .field import spectral_derivative

LAURENT_FLOOR = -2
INF = math.inf


class Series:
    __slots__ = ("coeffs", "lo", "exact", "_nz")

    def __init__(self, coeffs, lo: int = 0, exact: bool = False):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim < 4:
            raise ValueError("coefficient array needs an order axis and three grid axes")
        while lo < LAURENT_FLOOR and coeffs.shape[0] and not np.any(coeffs[0]):
            coeffs = coeffs[1:]
            lo += 1
        if lo < LAURENT_FLOOR:
            raise OrderMismatch(f"pole of order {-lo} is below the Laurent floor t^{LAURENT_FLOOR}")
        self.coeffs = coeffs
        self.lo = int(lo)
        self.exact = bool(exact)
        self._nz = None

    # -- construction -------------------------------------------------

    @classmethod
    def constant(cls, value, exact: bool = True) -> Series:
        return cls(np.asarray(value)[None], 0, exact)

    @classmethod
    def monomial(cls, power: int, value, exact: bool = True) -> Series:
        return cls(np.asarray(value)[None], power, exact)

    @classmethod
    def from_list(cls, values, lo: int = 0, exact: bool = False) -> Series:
        return cls(np.stack([np.asarray(v) for v in values]), lo, exact)

    @classmethod
    def scalar(cls, coeffs, lo: int = 0, exact: bool = False) -> Series:
        """x-independent scalar series from plain numbers."""
        c = np.asarray(coeffs, dtype=float).reshape(-1, 1, 1, 1)
        return cls(c, lo, exact)

    @classmethod
    def shifted_power(cls, t0: float, p: float, top: int) -> Series:
        """(t0 + tau)^p as a scalar series in tau through tau^top."""
        c = np.empty(top + 1)
        b = 1.0
        for j in range(top + 1):
            c[j] = b * t0 ** (p - j)
            b *= (p - j) / (j + 1)
        return cls.scalar(c, exact=(float(p).is_integer() and 0 <= p <= top))

    # -- basic properties ---------------------------------------------

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def top(self):
        return self.lo + self.n - 1

    @property
    def valid(self):
        """Highest order known exactly (inf for polynomials)."""
        return INF if self.exact else self.top

    @property
    def value_shape(self) -> tuple:
        return self.coeffs.shape[1:-3]

    @property
    def grid_shape(self) -> tuple:
        return self.coeffs.shape[-3:]

    def nonzero(self) -> np.ndarray:
        if self._nz is None:
            flat = self.coeffs.reshape(self.n, -1)
            self._nz = np.any(flat != 0, axis=1) if self.n else np.zeros(0, bool)
        return self._nz

    def coeff(self, k: int) -> np.ndarray:
        if k > self.valid:
            raise OrderMismatch(f"coefficient t^{k} is beyond the known order {self.top}")
        if k < self.lo or k > self.top:
            return np.zeros_like(self.coeffs[0]) if self.n else np.zeros(self.coeffs.shape[1:])
        return self.coeffs[k - self.lo]

    def __repr__(self):
        kind = "exact" if self.exact else "truncated"
        return (f"Series(t^{self.lo}..t^{self.top}, {kind}, value_shape={self.value_shape}, "
                f"grid={self.grid_shape})")

    # -- structural ops -----------------------------------------------

    def with_orders(self, lo: int, top: int) -> Series:
        """Re-window to [lo, top], padding with zeros where coefficients vanish."""
        if top > self.valid:
            raise OrderMismatch(f"cannot extend to t^{top}: known only through t^{self.top}")
        n = top - lo + 1
        out = np.zeros((max(n, 0),) + self.coeffs.shape[1:], dtype=self.coeffs.dtype)
        a, b = max(lo, self.lo), min(top, self.top)
        if b >= a:
            out[a - lo:b - lo + 1] = self.coeffs[a - self.lo:b - self.lo + 1]
        if lo > self.lo:
            dropped = self.coeffs[: min(lo, self.top + 1) - self.lo]
            if dropped.size and np.any(dropped != 0):
                raise OrderMismatch("re-window would drop nonzero low-order coefficients")
        return Series(out, lo, self.exact and top >= self.top)

    def truncate(self, top: int) -> Series:
        """Forget everything above t^top (result is a truncated series)."""
        if top >= self.top:
            if top > self.valid:
                raise OrderMismatch(f"series known only through t^{self.top}")
            s = self.with_orders(self.lo, top)
            return Series(s.coeffs, s.lo, False)
        return Series(self.coeffs[: max(top - self.lo + 1, 0)], self.lo, False)

    def as_polynomial(self) -> Series:
        """Reinterpret the stored coefficients as an exact polynomial."""
        return Series(self.coeffs, self.lo, True)

    def map(self, fn) -> Series:
        """Apply a linear, order-preserving map to the coefficient stack."""
        return Series(fn(self.coeffs), self.lo, self.exact)

    def shift(self, p: int) -> Series:
        """Multiply by t^p."""
        return Series(self.coeffs, self.lo + p, self.exact)

    def dt(self) -> Series:
        """Exact t-derivative."""
        if self.n == 0:
            return Series(self.coeffs, max(self.lo - 1, 0), self.exact)
        powers = np.arange(self.lo, self.top + 1, dtype=float)
        c = self.coeffs * powers.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        if self.lo == 0:
            if self.n == 1:
                return Series(np.zeros_like(self.coeffs), 0, self.exact)
            return Series(c[1:], 0, self.exact)
        if self.lo < 0 and -self.lo < self.n:
            c[-self.lo] = 0.0  # the t^0 coefficient differentiates to nothing
        return Series(c, self.lo - 1, self.exact)

    def dx(self, axis: int) -> Series:
        """Spectral derivative along boundary axis 1..3."""
        if self.grid_shape == (1, 1, 1):
            return Series(np.zeros_like(self.coeffs), self.lo, self.exact)
        # only slices that vary in x need a transform
        flat = self.coeffs.reshape((-1,) + self.grid_shape)
        varying = np.any((flat != flat[:, :1, :1, :1]).reshape(flat.shape[0], -1), axis=1)
        out = np.zeros_like(flat, dtype=float if not np.iscomplexobj(flat) else complex)
        if np.any(varying):
            out[varying] = spectral_derivative(flat[varying], axis)
        return Series(out.reshape(self.coeffs.shape), self.lo, self.exact)

    # -- ring operations ----------------------------------------------

    def _combine_bounds(self, other: Series):
        lo = min(self.lo, other.lo)
        if self.exact and other.exact:
            return lo, max(self.top, other.top), True
        return lo, int(min(self.valid, other.valid)), False

    def __add__(self, other):
        if not isinstance(other, Series):
            return self + Series.constant(np.broadcast_to(other, self.coeffs.shape[1:]))
        lo, top, exact = self._combine_bounds(other)
        return Series(_padded(self, lo, top) + _padded(other, lo, top), lo, exact)

    __radd__ = __add__

    def __neg__(self) -> Series:
        return Series(-self.coeffs, self.lo, self.exact)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> Series:
        """Multiply every coefficient by a number or an order-independent array."""
        return Series(self.coeffs * c, self.lo, self.exact)

    def __mul__(self, other):
        if isinstance(other, Series):
            return self.mul(other)
        return self.scale(other)

    __rmul__ = __mul__

    def mul(self, other: Series, spec: str | None = None, top: int | None = None) -> Series:
        """Cauchy product.

        ``spec`` is an einsum signature over value indices only (e.g.
        ``"ab,bc->ac"``); grid axes are appended automatically.  Without a
        spec the product is pointwise with broadcasting of scalar factors.
        ``top`` caps the result order (required when both factors are exact
        and the full product is not wanted).
        """
        a, b = self, other
        lo = a.lo + b.lo
        if a.exact and b.exact:
            hi = a.top + b.top
            exact = True
        else:
            hi = int(min(a.valid + b.lo, b.valid + a.lo))
            exact = False
        if top is not None:
            if top > hi and not exact:
                raise OrderMismatch(f"product known only through t^{hi}")
            if top < hi or exact:
                exact = exact and top >= hi
                hi = top
        op = _product_op(a, b, spec)
        na, nb = a.nonzero(), b.nonzero()
        out = None
        chunks = []
        for m in range(lo, hi + 1):
            ia = [i for i in range(a.n)
                  if na[i] and 0 <= m - a.lo - i - b.lo < b.n and nb[m - a.lo - i - b.lo]]
            if ia:
                ib = [m - a.lo - i - b.lo for i in ia]
                chunks.append(op(a.coeffs[ia], b.coeffs[ib]))
            else:
                chunks.append(None)
        shape = next((c.shape for c in chunks if c is not None), None)
        if shape is None:
            shape = _empty_product_shape(a, b, spec)
        out = np.zeros((hi - lo + 1,) + shape)
        for j, c in enumerate(chunks):
            if c is not None:
                out[j] = c
        return Series(out, lo, exact)

    # -- evaluation ---------------------------------------------------

    def evaluate(self, t: float) -> np.ndarray:
        """Horner evaluation of the stored coefficients at t."""
        if t < 0:
            raise ValueError("series are evaluated at t >= 0 only")
        if self.lo < 0 and t == 0:
            raise ValueError("Laurent series with a pole cannot be evaluated at t = 0")
        acc = np.zeros_like(self.coeffs[0], dtype=float) if self.n else 0.0
        for c in self.coeffs[::-1]:
            acc = acc * t + c
        return acc * float(t) ** self.lo if self.lo else acc

    def sup_norms(self) -> dict[int, float]:
        return {self.lo + i: float(np.max(np.abs(c))) if c.size else 0.0
                for i, c in enumerate(self.coeffs)}

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def leading_order(self, tol: float = 1e-12):
        """First order whose coefficient exceeds tol (inf if none)."""
        for k, v in self.sup_norms().items():
            if v > tol:
                return k
        return INF

    def recenter(self, t0: float, top: int) -> Series:
        """Polynomial series p(t) re-expanded as p(t0 + tau) through tau^top."""
        if self.lo < 0:
            raise OrderMismatch("cannot recenter a Laurent series")
        out = np.zeros((top + 1,) + self.coeffs.shape[1:])
        for i, c in enumerate(self.coeffs):
            k = self.lo + i
            for j in range(min(k, top) + 1):
                out[j] += math.comb(k, j) * t0 ** (k - j) * c
        return Series(out, 0, self.exact and top >= self.top)


def _padded(s: Series, lo: int, top: int) -> np.ndarray:
    n = top - lo + 1
    if s.n == n and s.lo == lo:
        return s.coeffs
    out = np.zeros((n,) + s.coeffs.shape[1:], dtype=s.coeffs.dtype)
    a, b = max(lo, s.lo), min(top, s.top)
    if b >= a:
        out[a - lo:b - lo + 1] = s.coeffs[a - s.lo:b - s.lo + 1]
    return out


def _product_op(a: Series, b: Series, spec):
    if spec is None:
        da, db = len(a.value_shape), len(b.value_shape)
        if da and db and a.value_shape != b.value_shape:
            raise ValueError("pointwise product needs equal value shapes or a scalar factor")

        def op(x, y):
            if da < db:
                x = x.reshape(x.shape[:1] + (1,) * (db - da) + x.shape[1:])
            elif db < da:
                y = y.reshape(y.shape[:1] + (1,) * (da - db) + y.shape[1:])
            return (x * y).sum(axis=0)
        return op
    lhs, rhs = spec.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    full = f"n{sa}...,n{sb}...->{rhs}..."

    def op(x, y):
        return np.einsum(full, x, y)
    return op


def _empty_product_shape(a: Series, b: Series, spec):
    x = np.zeros((1,) + a.coeffs.shape[1:])
    y = np.zeros((1,) + b.coeffs.shape[1:])
    return _product_op(a, b, spec)(x, y).shape


def series_mul(a: Series, b: Series, spec: str | None = None) -> Series:
    """Cauchy product of two truncated series with equal truncation order."""
    if not (a.exact or b.exact) and (a.lo, a.top) != (b.lo, b.top):
        raise OrderMismatch(f"truncation orders differ: {a.top} vs {b.top}")
    return a.mul(b, spec)


def series_add(a: Series, b: Series) -> Series:
    if not (a.exact or b.exact) and a.top != b.top:
        raise OrderMismatch(f"truncation orders differ: {a.top} vs {b.top}")
    return a + b


def series_scale(a: Series, c) -> Series:
    return a.scale(c)


def evaluate(x: Series, t: float) -> np.ndarray:
    return x.evaluate(t)


def laurent_assert_regular(x: Series, tol: float = 1e-12) -> Series:
    """Drop the negative-order part after checking that it vanishes."""
    for k in range(x.lo, 0):
        if k > x.top:
            break
        norm = float(np.max(np.abs(x.coeff(k))))
        if norm > tol:
            raise CancellationFailure(k, norm, tol)
    if x.lo >= 0:
        return x
    if x.top < 0:
        return Series(np.zeros((0,) + x.coeffs.shape[1:]), 0, x.exact)
    return Series(x.coeffs[-x.lo:], 0, x.exact)


def _to_points(c: np.ndarray) -> np.ndarray:
    """(d, d, *grid) -> (*grid, d, d)."""
    return np.moveaxis(c, (0, 1), (-2, -1))


def _from_points(c: np.ndarray) -> np.ndarray:
    return np.moveaxis(c, (-2, -1), (0, 1))


def matrix_series_inverse(a: Series, top: int | None = None, cond_limit: float = 1e6) -> Series:
    """Inverse of a square-matrix-valued series, order by order.

    X_0 = A_0^-1 and X_k = -X_0 sum_{j=1..k} A_j X_{k-j}.  The result is
    known through the same order as ``a`` (or through ``top``).
    """
    if len(a.value_shape) != 2 or a.value_shape[0] != a.value_shape[1]:
        raise ValueError("matrix_series_inverse needs square matrix coefficients")
    if a.lo != 0:
        raise OrderMismatch("matrix series must start at t^0")
    if top is None:
        if a.exact and a.top == 0:
            top = 0
        elif a.exact:
            raise OrderMismatch("inverse of a polynomial needs an explicit truncation order")
        else:
            top = a.top
    if top > a.valid:
        raise OrderMismatch(f"series known only through t^{a.top}")
    a0 = _to_points(a.coeff(0))
    s = np.linalg.svd(a0, compute_uv=False)
    smin = s[..., -1]
    with np.errstate(divide="ignore"):
        cond = np.where(smin > 0, s[..., 0] / np.where(smin > 0, smin, 1.0), np.inf)
    worst = np.unravel_index(np.argmax(cond), cond.shape)
    if not np.all(np.isfinite(cond)) or cond[worst] > cond_limit:
        raise SingularMetric(
            f"leading coefficient is singular or ill-conditioned at grid point "
            f"{tuple(int(i) for i in worst)} (condition number {cond[worst]:.3e})",
            worst_point=tuple(int(i) for i in worst), value=float(cond[worst]))
    x0 = np.linalg.inv(a0)
    xs = [x0]
    nz = a.nonzero()
    for k in range(1, top + 1):
        acc = None
        for j in range(1, k + 1):
            if j > a.top or not nz[j]:
                continue
            term = _to_points(a.coeff(j)) @ xs[k - j]
            acc = term if acc is None else acc + term
        xs.append(np.zeros_like(x0) if acc is None else -(x0 @ acc))
    out = np.stack([_from_points(x) for x in xs])
    exact = a.exact and a.top == 0
    return Series(out, 0, exact)
