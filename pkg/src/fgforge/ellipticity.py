"""Leading boundary symbol of the linearized Bach boundary problem.

Unknowns h_ab are ordered as the six tangential components (11, 12, 13, 22,
23, 33) followed by (00, 01, 02, 03).  The 20 boundary rows come in four
blocks: Dirichlet data on h_ij (order 0), Neumann-type data on h_0a
(order 1), second-order data on h_ij (order 2) and third-order data on h_0a
(order 3).  Entries are polynomials in z, the conormal symbol variable, and
are stored as ascending coefficient arrays of length 4.

The complementing condition asks that no nonzero combination of rows gives
polynomials all divisible by (z - z+)^2, where z+ is the root of the
interior symbol in the upper half plane.  That is the rank condition on the
20 x 20 matrix of values and z-derivatives at z+.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

N_UNKNOWNS = 10
N_ROWS = 20
DEGREE = 3
BLOCK_DEGREES = (0, 1, 2, 3)
BLOCKS = (range(0, 6), range(6, 10), range(10, 16), range(16, 20))
TANGENTIAL = range(0, 6)
MIXED = range(6, 10)
RANK_THRESHOLD = 1e-8


@dataclass(frozen=True)
class CotangentDatum:
    """Tangential covector xi at a boundary point with metric g (4x4, index 0 normal)."""

    xi: tuple
    metric: tuple | None = None

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (3,) or not np.linalg.norm(xi) > 0:
            raise ValueError("xi must be a nonzero 3-vector")
        if self.metric is not None:
            g = np.asarray(self.metric, dtype=float)
            if g.shape != (4, 4) or not np.allclose(g, g.T):
                raise ValueError("metric must be a symmetric 4x4 matrix")
            if np.linalg.eigvalsh(g)[0] <= 0:
                raise ValueError("metric must be positive definite")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.xi))


@dataclass(frozen=True)
class SymbolMatrix:
    """20 x 10 matrix of polynomials in z, coeffs[r, k, p] of z^p."""

    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (N_ROWS, N_UNKNOWNS, DEGREE + 1):
            raise ValueError(f"unexpected symbol shape {self.coeffs.shape}")

    def entry(self, row: int, col: int) -> np.ndarray:
        """Coefficients of the (row, col) entry, 1-based indices."""
        return self.coeffs[row - 1, col - 1]

    def evaluate(self, z: complex) -> np.ndarray:
        return P.polyval(z, np.moveaxis(self.coeffs, -1, 0))

    def derivative(self, z: complex) -> np.ndarray:
        d = self.coeffs[..., 1:] * np.arange(1, DEGREE + 1)
        return P.polyval(z, np.moveaxis(d, -1, 0))

    def row_degrees(self, tol: float = 0.0) -> np.ndarray:
        nz = np.abs(self.coeffs) > tol
        deg = np.full(N_ROWS, -1)
        for r in range(N_ROWS):
            powers = np.nonzero(nz[r].any(axis=0))[0]
            if powers.size:
                deg[r] = powers.max()
        return deg


def interior_root_polynomial(d: CotangentDatum) -> np.ndarray:
    """prod over the 20 upper-half-plane roots of the flat symbol: (z - i|xi|)^20.

    Returned as ascending coefficients.
    """
    return P.polyfromroots([1j * d.norm] * N_ROWS)


def interior_symbol(d: CotangentDatum) -> np.ndarray:
    """(|xi|^2 + z^2)^2 for the euclidean reduction, ascending coefficients."""
    q = np.array([d.norm**2, 0.0, 1.0])
    return P.polymul(q, q)


def interior_roots(d: CotangentDatum) -> np.ndarray:
    return P.polyroots(interior_symbol(d))


def _flat_entries(zeta, sq):
    """Block entries as polynomials given the covector polynomials.

    ``zeta`` is a list of four polynomials (z-component then xi_1..xi_3) and
    ``sq`` the polynomial |xi|^2.  Returns a dict (row, col) -> polynomial,
    0-based.
    """
    z, x = zeta[0], zeta[1:]
    out = {}
    for i in range(6):
        out[(i, i)] = np.array([1.0])
        out[(10 + i, i)] = P.polyadd(P.polymul(z, z), sq)
    # block {2}: rows 6..9 on the mixed columns 6..9
    out[(6, 6)] = z
    for j in range(3):
        out[(6, 7 + j)] = 2.0 * x[j]
        out[(7 + j, 6)] = 0.5 * x[j]
        out[(7 + j, 7 + j)] = z
    # block {4}: rows 16..19
    cubic = P.polymul(z, P.polyadd(P.polymul(z, z), sq))
    for j in range(4):
        out[(16 + j, 6 + j)] = cubic
    for j in range(3):
        out[(16, 7 + j)] = -P.polymul(sq, x[j]) / 3.0
    return out


def _pack(entries) -> np.ndarray:
    c = np.zeros((N_ROWS, N_UNKNOWNS, DEGREE + 1), dtype=complex)
    for (r, k), poly in entries.items():
        poly = P.polytrim(np.atleast_1d(np.asarray(poly, dtype=complex)), 0)
        if poly.size > DEGREE + 1:
            raise ValueError("symbol entry exceeds degree 3")
        c[r, k, :poly.size] = poly
    return c


def _frame(d: CotangentDatum) -> np.ndarray:
    """E with E^T E = g^-1, so |E zeta| is the g-length of the covector zeta."""
    if d.metric is None:
        return np.eye(4)
    w, v = np.linalg.eigh(np.linalg.inv(np.asarray(d.metric, dtype=float)))
    return (v * np.sqrt(w)) @ v.T


def covector_polynomials(d: CotangentDatum):
    """Frame components of zeta(z) = z n + xi, each a degree-1 polynomial."""
    e = _frame(d)
    full = np.concatenate([[0.0], np.asarray(d.xi, float)])
    return [np.array([e[a] @ full, e[a, 0]]) for a in range(4)]


def assemble_boundary_symbol(d: CotangentDatum, degenerate: bool = False) -> SymbolMatrix:
    """Leading boundary symbol of conditions {1}-{4}.

    For a non-euclidean metric the entries are the flat ones evaluated on the
    orthonormal-frame components of z n + xi.  With ``degenerate`` the rows
    of block {4} are replaced by copies of block {2}.
    """
    zeta = covector_polynomials(d)
    sq = P.polyadd(P.polyadd(P.polymul(zeta[1], zeta[1]), P.polymul(zeta[2], zeta[2])),
                   P.polymul(zeta[3], zeta[3]))
    c = _pack(_flat_entries(zeta, sq))
    if degenerate:
        c[16:20] = c[6:10]
    return SymbolMatrix(c)


def upper_root(d: CotangentDatum) -> complex:
    """Root z+ of |z n + xi|_g^2 with positive imaginary part."""
    zeta = covector_polynomials(d)
    q = np.zeros(1)
    for p in zeta:
        q = P.polyadd(q, P.polymul(p, p))
    roots = P.polyroots(q)
    return complex(roots[np.argmax(roots.imag)])


def complementing_matrix(symbol: SymbolMatrix, z0: complex) -> np.ndarray:
    """Rows [value at z0, derivative at z0] per unknown; columns are the 20 rows."""
    val = symbol.evaluate(z0)  # (20, 10)
    der = symbol.derivative(z0)
    return np.concatenate([val.T, der.T], axis=0)


def complementing_check(d: CotangentDatum, degenerate: bool = False,
                        threshold: float = RANK_THRESHOLD) -> dict:
    """Pass iff the 20 x 20 double-root matrix has full rank."""
    symbol = assemble_boundary_symbol(d, degenerate)
    z0 = upper_root(d)
    m = complementing_matrix(symbol, z0)
    u, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > threshold * s[0]))
    kernel = vh[rank:].conj().T
    return {
        "passed": rank == N_ROWS,
        "rank": rank,
        "kernel_dim": N_ROWS - rank,
        "kernel_basis": kernel,
        "root": z0,
        "singular_values": s,
    }


def combined_polynomials(symbol: SymbolMatrix, c: np.ndarray) -> np.ndarray:
    """sum_r c_r B_rk(z) for each unknown k, shape (10, 4)."""
    return np.einsum("r,rkp->kp", c, symbol.coeffs)


def structure_invariants(symbol: SymbolMatrix) -> dict:
    """Row degrees per block and the shape of the mixed-column polynomials.

    On the (0a) columns every row combination is a polynomial of degree at
    most 3 with zero z^2 coefficient; this holds for all combinations iff it
    holds entrywise.  The tangential columns carry z^2 + |xi|^2 by design and
    are excluded from the z^2 statement.
    """
    deg = symbol.row_degrees(1e-14)
    block_ok = all(all(deg[r] == want for r in rows) for rows, want in
                   zip(BLOCKS, BLOCK_DEGREES))
    mixed = symbol.coeffs[:, list(MIXED)]
    return {
        "row_degrees": deg.tolist(),
        "block_degrees_ok": bool(block_ok),
        "max_degree": int(deg.max()),
        "mixed_z2_max": float(np.max(np.abs(mixed[..., 2]))),
    }


def sample_xi(count: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit tangential covectors."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def perturbed_metric(rng: np.random.Generator, eps: float) -> np.ndarray:
    """delta + eps * (random symmetric matrix of unit spectral norm)."""
    a = rng.standard_normal((4, 4))
    s = a + a.T
    return np.eye(4) + eps * s / np.linalg.norm(s, 2)
