import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from fgforge.ellipticity import (MIXED, N_ROWS, CotangentDatum, assemble_boundary_symbol,
                                 combined_polynomials, complementing_check,
                                 complementing_matrix, interior_root_polynomial, interior_roots,
                                 interior_symbol, perturbed_metric, sample_xi,
                                 structure_invariants, upper_root)

E1 = CotangentDatum((1.0, 0.0, 0.0))
E2 = CotangentDatum((0.0, 1.0, 0.0))


def test_datum_validation():
    with pytest.raises(ValueError):
        CotangentDatum((0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        CotangentDatum((1.0, 0.0, 0.0), tuple(map(tuple, -np.eye(4))))
    with pytest.raises(ValueError):
        CotangentDatum((1.0, 0.0))


def test_interior_symbol_and_roots():
    assert np.allclose(interior_symbol(E1), [1.0, 0.0, 2.0, 0.0, 1.0])
    roots = interior_roots(E1)
    # double roots are only resolved to about the square root of round-off
    assert np.allclose(np.sort(roots.imag), [-1, -1, 1, 1], atol=1e-6)
    assert np.max(np.abs(roots.real)) <= 1e-6
    assert upper_root(E1) == pytest.approx(1j)


def test_interior_root_polynomial():
    poly = interior_root_polynomial(E1)
    assert poly.size == N_ROWS + 1
    assert abs(P.polyval(1j, poly)) <= 1e-12


def test_known_entries():
    s1 = assemble_boundary_symbol(E1)
    assert np.allclose(s1.entry(7, 7), [0, 1, 0, 0])
    assert np.allclose(s1.entry(7, 8), [2, 0, 0, 0])
    s2 = assemble_boundary_symbol(E2)
    assert np.allclose(s2.entry(17, 9), [-1.0 / 3.0, 0, 0, 0])
    assert np.allclose(s2.entry(17, 8), 0.0)
    # Dirichlet block is the identity on the tangential columns
    for r in range(1, 7):
        assert np.allclose(s1.entry(r, r), [1, 0, 0, 0])


def test_flat_check_passes():
    res = complementing_check(E1)
    assert res["passed"] and res["rank"] == N_ROWS and res["kernel_dim"] == 0
    assert res["root"] == pytest.approx(1j)


def test_degenerate_variant_fails_with_kernel_four():
    res = complementing_check(E1, degenerate=True)
    assert not res["passed"]
    assert res["kernel_dim"] == 4
    # kernel vectors are genuine: their row combination has a double root at z+
    symbol = assemble_boundary_symbol(E1, degenerate=True)
    m = complementing_matrix(symbol, res["root"])
    assert np.max(np.abs(m @ res["kernel_basis"])) <= 1e-10


@pytest.mark.parametrize("xi", sample_xi(20, seed=0))
def test_samples_pass(xi):
    assert complementing_check(CotangentDatum(tuple(xi)))["passed"]


def test_samples_are_deterministic():
    assert np.array_equal(sample_xi(20, 3), sample_xi(20, 3))
    assert np.allclose(np.linalg.norm(sample_xi(20, 3), axis=1), 1.0)


def test_perturbed_metric_passes():
    rng = np.random.default_rng(0)
    for xi in sample_xi(20, seed=1):
        g = perturbed_metric(rng, 1e-2)
        assert np.linalg.norm(g - np.eye(4), 2) == pytest.approx(1e-2)
        d = CotangentDatum(tuple(xi), tuple(map(tuple, g)))
        assert complementing_check(d)["passed"]


def test_structure_invariants():
    inv = structure_invariants(assemble_boundary_symbol(E1))
    assert inv["block_degrees_ok"]
    assert inv["max_degree"] == 3
    assert inv["mixed_z2_max"] == 0.0


@given(st.integers(0, 2**31 - 1))
def test_row_combinations_on_mixed_columns(seed):
    """Any row combination restricted to the (0a) columns has degree <= 3 and no z^2 term."""
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(3)
    symbol = assemble_boundary_symbol(CotangentDatum(tuple(xi)))
    c = rng.standard_normal(N_ROWS) + 1j * rng.standard_normal(N_ROWS)
    polys = combined_polynomials(symbol, c)
    assert polys.shape[1] == 4
    assert np.max(np.abs(polys[list(MIXED), 2])) == 0.0


@given(st.floats(0.2, 5.0), st.integers(0, 2**31 - 1))
def test_check_is_scale_invariant(lam, seed):
    xi = np.random.default_rng(seed).standard_normal(3)
    a = complementing_check(CotangentDatum(tuple(xi)))
    b = complementing_check(CotangentDatum(tuple(lam * xi)))
    assert a["passed"] == b["passed"] == True  # noqa: E712
    assert b["root"] == pytest.approx(lam * a["root"])


@given(st.integers(0, 2**31 - 1))
def test_upper_root_against_quadratic_formula(seed):
    rng = np.random.default_rng(seed)
    g = perturbed_metric(rng, 0.2)
    xi = rng.standard_normal(3)
    gi = np.linalg.inv(g)
    # g^-1(z n + xi, z n + xi) = a z^2 + b z + c
    a, b, c = gi[0, 0], 2 * gi[0, 1:] @ xi, xi @ gi[1:, 1:] @ xi
    disc = np.sqrt(complex(b * b - 4 * a * c))
    roots = [(-b + disc) / (2 * a), (-b - disc) / (2 * a)]
    want = max(roots, key=lambda z: z.imag)
    got = upper_root(CotangentDatum(tuple(xi), tuple(map(tuple, g))))
    assert abs(got - want) <= 1e-10 * abs(want)
