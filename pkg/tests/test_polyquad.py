import numpy as np
import pytest
from hypothesis import given, strategies as st

from plateparadox.errors import ArgumentError
from plateparadox.polyquad import (PolyBasis, edge_quadrature, eval_basis, monomial_exponents,
                                   poly_dimension, reference_monomial_integral, triangle_quadrature)


def integrate_reference(rule, a, b):
    x, y = rule.points[:, 1], rule.points[:, 2]
    return 0.5 * np.sum(rule.weights * x**a * y**b)


def test_reference_integrals():
    r = triangle_quadrature(10)
    assert integrate_reference(r, 0, 0) == pytest.approx(0.5, rel=1e-15)
    assert integrate_reference(r, 1, 0) == pytest.approx(1 / 6, rel=1e-15)
    exact = reference_monomial_integral(4, 4)
    assert exact == pytest.approx(24 * 24 / 3628800)
    assert abs(integrate_reference(r, 4, 4) - exact) <= 1e-14 * exact


@pytest.mark.parametrize("deg", range(1, 13))
def test_triangle_rule_exactness(deg):
    r = triangle_quadrature(deg)
    assert r.exact_degree == deg
    assert np.all(r.weights > 0)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(r.points > 0)
    np.testing.assert_allclose(r.points.sum(axis=1), 1.0, atol=1e-15)
    for a, b in monomial_exponents(deg):
        exact = reference_monomial_integral(a, b)
        assert abs(integrate_reference(r, a, b) - exact) <= 1e-13 * exact


@pytest.mark.parametrize("deg", range(1, 12))
def test_edge_rule_exactness(deg):
    r = edge_quadrature(deg)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(np.sort(r.points), np.sort(1 - r.points), atol=1e-15)
    for k in range(deg + 1):
        assert np.sum(r.weights * r.points**k) == pytest.approx(1 / (k + 1), rel=1e-14)


def test_edge_rule_examples():
    assert np.sum(edge_quadrature(1).weights * edge_quadrature(1).points) == pytest.approx(0.5)
    r2 = edge_quadrature(3)
    assert len(r2.points) == 2
    assert np.sum(r2.weights * r2.points**3) == pytest.approx(0.25, rel=1e-15)
    r6 = edge_quadrature(11)
    assert len(r6.points) == 6
    assert abs(np.sum(r6.weights * r6.points**10) - 1 / 11) <= 1e-14


@pytest.mark.parametrize("bad", [0, 13, 2.5])
def test_triangle_rule_bad_degree(bad):
    with pytest.raises(ArgumentError):
        triangle_quadrature(bad)


@pytest.mark.parametrize("bad", [0, 12])
def test_edge_rule_bad_degree(bad):
    with pytest.raises(ArgumentError):
        edge_quadrature(bad)


def test_eval_basis_examples():
    b = PolyBasis(2)
    exps = [tuple(e) for e in b.exponents]
    v, g, h = eval_basis(b, [1.0, 0.0])
    i = exps.index((2, 0))
    assert v[i] == 1.0 and np.array_equal(g[i], [2.0, 0.0])
    assert np.array_equal(h[i], [[2.0, 0.0], [0.0, 0.0]])
    j = exps.index((1, 1))
    for p in ([0.3, -2.0], [5.0, 1.0]):
        _, _, h = eval_basis(b, p)
        assert np.array_equal(h[j], [[0.0, 1.0], [1.0, 0.0]])
    assert len(PolyBasis(5)) == 21 == poly_dimension(5)


def test_scaled_basis_derivatives():
    b = PolyBasis(3, center=(0.5, -1.0), scale=0.25)
    p = np.array([[0.7, -0.9]])
    exps = [tuple(e) for e in b.exponents]
    k = exps.index((2, 1))
    xi, eta = (0.7 - 0.5) / 0.25, (-0.9 + 1.0) / 0.25
    assert b.derivative(p)[0, k] == pytest.approx(xi**2 * eta)
    assert b.derivative(p, 1, 0)[0, k] == pytest.approx(2 * xi * eta / 0.25)
    assert b.derivative(p, 1, 1)[0, k] == pytest.approx(2 * xi / 0.0625)


def test_hessian_symmetry_random_points():
    rng = np.random.default_rng(0)
    b = PolyBasis(5, coeffs=rng.standard_normal((21, 21)))
    _, _, h = b.eval(rng.uniform(-1, 1, (100, 2)))
    assert np.array_equal(h[..., 0, 1], h[..., 1, 0])


@given(st.integers(0, 2**31 - 1))
def test_hessian_identity_for_quintics(seed):
    rng = np.random.default_rng(seed)
    b = PolyBasis(5, coeffs=rng.standard_normal((1, 21)))
    _, _, H = b.eval(rng.uniform(-1, 1, (20, 2)))
    H = H[:, 0]
    norm2 = np.sum(H**2, axis=(-1, -2))
    lap = H[..., 0, 0] + H[..., 1, 1]
    det = H[..., 0, 0] * H[..., 1, 1] - H[..., 0, 1] * H[..., 1, 0]
    assert np.all(np.abs(norm2 - (lap**2 - 2 * det)) <= 1e-12 * np.maximum(norm2, 1e-300))


def test_mismatched_coefficients():
    with pytest.raises(ArgumentError):
        PolyBasis(2, coeffs=np.ones((2, 5)))
