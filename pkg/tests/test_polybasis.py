from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wg_biharm.polybasis import (MappedBasis, bubble_weighted_system, dual_basis, eval_shape, lagrange,
                                 lattice_nodes, mass_matrix, quadrature_rule)


def test_quadrature_degree0_triangle():
    r = quadrature_rule(0, 2)
    assert len(r.weights) == 1
    assert r.weights[0] == pytest.approx(0.5, abs=1e-15)


def test_quadrature_gauss_x14():
    r = quadrature_rule(14, 1)
    assert np.dot(r.weights, r.points[:, 0] ** 14) == pytest.approx(1 / 15, abs=1e-14)


def test_quadrature_x7y7_exact():
    # int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    exact = Fraction(factorial(7) * factorial(7), factorial(16))
    r = quadrature_rule(14, 2)
    val = np.dot(r.weights, r.points[:, 0] ** 7 * r.points[:, 1] ** 7)
    assert val == pytest.approx(float(exact), rel=1e-13)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("degree", [0, 1, 5, 14, 20, 29])
def test_quadrature_monomials(degree, dim):
    r = quadrature_rule(degree, dim)
    assert r.degree >= degree
    assert np.all(r.weights > 0)
    assert r.weights.sum() == pytest.approx(1.0 if dim == 1 else 0.5, rel=1e-14)
    for a in range(degree + 1):
        if dim == 1:
            assert np.dot(r.weights, r.points[:, 0] ** a) == pytest.approx(1 / (a + 1), rel=1e-13)
        else:
            for b in range(degree + 1 - a):
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                val = np.dot(r.weights, r.points[:, 0] ** a * r.points[:, 1] ** b)
                assert val == pytest.approx(exact, rel=1e-13)


def test_quadrature_errors():
    with pytest.raises(ValueError):
        quadrature_rule(-1, 2)
    with pytest.raises(ValueError):
        quadrature_rule(1000, 1)
    with pytest.raises(ValueError):
        quadrature_rule(2, 3)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("r", range(0, 7))
def test_kronecker_and_partition(r, dim):
    b = lagrange(r, dim)
    assert np.abs(b.values(b.nodes) - np.eye(len(b))).max() < 1e-12
    pts = np.random.default_rng(r).random((100, dim))
    if dim == 2:
        pts = pts[pts.sum(axis=1) <= 1]
    assert np.abs(b.values(pts).sum(axis=1) - 1).max() < 1e-12


def test_node_ordering():
    assert np.allclose(lattice_nodes(4, 1)[:, 0], [0, 0.25, 0.5, 0.75, 1])
    n = lattice_nodes(3, 2)
    assert np.allclose(n[:3], [[0, 0], [1, 0], [0, 1]])
    assert np.allclose(n[3:5], [[1 / 3, 0], [2 / 3, 0]])
    assert np.allclose(n[-1], [1 / 3, 1 / 3])


def test_eval_shape_node_quarter():
    b = lagrange(4, 1)
    vals, grads, laps = eval_shape(b, [0.25])
    assert vals[1] == pytest.approx(1.0, abs=1e-13)
    assert np.abs(np.delete(vals, 1)).max() < 1e-13


def test_restricted_node_function():
    # the degree-4 nodal function of node 1/4: vanishes at 1/2, equals 1 at 1/4
    b = lagrange(4, 1)
    assert b.values(np.array([[0.5]]))[0, 1] == pytest.approx(0.0, abs=1e-14)
    assert b.values(np.array([[0.25]]))[0, 1] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("r", [1, 2, 4, 6])
def test_derivatives_finite_difference(r, dim):
    b = lagrange(r, dim)
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.1, 0.4, size=(5, dim))
    step = 1e-6
    g = b.gradients(pts)
    lap = b.laplacians(pts)
    h2 = 1e-3
    fd_lap = np.zeros_like(lap)
    for c in range(dim):
        e = np.zeros(dim)
        e[c] = step
        fd = (b.values(pts + e) - b.values(pts - e)) / (2 * step)
        assert np.abs(fd - g[..., c]).max() < 1e-6 * max(1, np.abs(g).max())
        e[c] = h2  # fourth-order second-difference stencil
        fd_lap += (-b.values(pts + 2 * e) + 16 * b.values(pts + e) - 30 * b.values(pts)
                   + 16 * b.values(pts - e) - b.values(pts - 2 * e)) / (12 * h2**2)
    assert np.abs(fd_lap - lap).max() < 1e-5 * max(1, np.abs(lap).max())


def test_mass_matrix_p0():
    assert np.allclose(mass_matrix(lagrange(0, 1)), [[1.0]])


@pytest.mark.parametrize("dim", [1, 2])
def test_mass_matrix_symmetric_spd(dim):
    m = mass_matrix(lagrange(4, dim))
    assert np.abs(m - m.T).max() < 1e-14
    assert np.linalg.eigvalsh(m).min() > 0
    mw = mass_matrix(lagrange(3, dim), weight=lambda p: 1 + p[:, 0], weight_degree=1)
    assert np.abs(mw - mw.T).max() < 1e-14
    assert np.linalg.eigvalsh(mw).min() > 0


def test_bubble_weighted_system_fixture():
    F = Fraction
    m = np.array([[F(152, 315), F(-16, 63), F(8, 63)],
                  [F(-4, 21), F(18, 35), F(-4, 21)],
                  [F(8, 63), F(-16, 63), F(152, 315)]], dtype=float)
    inv = np.array([[F(2655, 1024), F(75, 64), F(-225, 1024)],
                    [F(225, 256), F(45, 16), F(225, 256)],
                    [F(-225, 1024), F(75, 64), F(2655, 1024)]], dtype=float)
    a = bubble_weighted_system(4)
    assert np.abs(a - m).max() < 1e-12
    assert np.abs(np.linalg.inv(a) - inv).max() < 1e-12


def test_dual_function_of_node_quarter():
    psi = dual_basis(lagrange(4, 1))
    mono = psi.monomial_coeffs()[1][:, 0]  # coefficients of 1, x, ..., x^4
    expected = [-485 / 128, 2865 / 32, -21105 / 64, 13615 / 32, -11655 / 64]
    assert np.abs(mono - expected).max() < 1e-12
    nodal = psi.coeffs[1]
    expected_nodal = [-485 / 128, 64225 / 16384, 345 / 1024, -4255 / 16384, -85 / 128]
    assert np.abs(nodal - expected_nodal).max() < 1e-12


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("r", [2, 3, 4, 5, 6])
def test_duality(r, dim):
    b = lagrange(r, dim)
    psi = dual_basis(b)
    rule = quadrature_rule(2 * r, dim)
    m = np.einsum("q,qi,qj->ij", rule.weights, b.values(rule.points), psi.values(rule.points))
    assert np.abs(m - np.eye(len(b))).max() < 1e-11
    assert np.allclose(psi.coeffs, np.linalg.inv(mass_matrix(b)))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-2, 2), st.floats(-2, 2), st.integers(1, 4))
def test_dual_coefficients_affine_invariant(scale, ox, oy, r):
    # on a mapped simplex the dual coefficients are the reference ones divided by |det J|
    b = lagrange(r, 2)
    verts = np.array([[ox, oy], [ox + scale, oy + 0.3 * scale], [ox - 0.2 * scale, oy + 0.9 * scale]])
    det = abs(np.linalg.det(np.array([verts[1] - verts[0], verts[2] - verts[0]]).T))
    mapped = dual_basis(b, vertices=verts)
    ref = dual_basis(b)
    assert np.allclose(mapped.coeffs * det, ref.coeffs, rtol=1e-10, atol=1e-10)


def test_mapped_basis_matches_lagrange():
    b = lagrange(2, 1)
    m = MappedBasis(b, origin=np.array([0.25]), scale=0.5)
    t = np.array([[0.25], [0.5], [0.75]])
    assert np.allclose(m.values(t), np.eye(3), atol=1e-14)
