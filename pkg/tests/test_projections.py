import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import gauss, lagrange_1d, triangle_rule
from wg_biharm.cases import get_case, polynomial_case
from wg_biharm.checks import (commuting_defect, constraint_defect, edge_mass_defect, q0_l2_error,
                              random_polynomial_case, volume_mass_defect)
from wg_biharm.dofs import build_dof_map
from wg_biharm.mesh import element_geometry, generate_uniform_mesh, mesh_from_arrays
from wg_biharm.polybasis import lagrange
from wg_biharm.projections import (CORNER, INTERNAL, MIDDLE, boundary_projection_Qb, classify_nodes,
                                   edge_projection_Qn, element_projection_Qhk, project_Qh, scott_zhang)
from wg_biharm.weak_laplacian import BatchGeometry, pk_values


def x4(x, y):
    return x**4


def test_classify_n1_k0():
    c = classify_nodes(generate_uniform_mesh(1), 0)
    assert (c.count(CORNER), c.count(MIDDLE), c.count(INTERNAL)) == (4, 5, 0)


def test_classify_n1_k1():
    mesh = generate_uniform_mesh(1)
    c = classify_nodes(mesh, 1)
    assert (c.count(CORNER), c.count(MIDDLE), c.count(INTERNAL)) == (4, 10, 2)
    dm = build_dof_map(mesh, 1)
    assert np.array_equal(c.patch[dm.cell_interior_dofs()].ravel(), [0, 1])


@pytest.mark.parametrize("k", [0, 1, 2])
def test_classify_patches(k):
    mesh = generate_uniform_mesh(3)
    dm = build_dof_map(mesh, k)
    c = classify_nodes(mesh, k, dm)
    corner = c.kind == CORNER
    bnd = c.boundary & (c.kind != INTERNAL)
    assert np.all(mesh.boundary_edges[c.patch[bnd]])
    # corner patches contain their vertex
    v = np.arange(mesh.n_vertices)
    assert np.all((mesh.edges[c.patch[corner], 0] == v) | (mesh.edges[c.patch[corner], 1] == v))
    # middle nodes sit on their patch edge
    mid = dm.edge_node_dofs()
    assert np.array_equal(c.patch[mid], np.repeat(np.arange(mesh.n_edges)[:, None], mid.shape[1], axis=1))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_preserves_polynomials(k):
    mesh = generate_uniform_mesh(3)
    dm = build_dof_map(mesh, k)
    xy = dm.node_coords
    rng = np.random.default_rng(k)
    for _ in range(20):
        u = random_polynomial_case(k + 2, rng)
        exact = u.u(xy[:, 0], xy[:, 1])
        assert np.abs(scott_zhang(mesh, k, u.u, dm) - exact).max() <= 1e-10 * np.abs(exact).max()


def test_preserves_x_squared_and_one():
    mesh = generate_uniform_mesh(4)
    dm = build_dof_map(mesh, 0)
    xy = dm.node_coords
    assert np.abs(scott_zhang(mesh, 0, lambda x, y: x**2, dm) - xy[:, 0] ** 2).max() < 1e-11
    assert np.abs(scott_zhang(mesh, 0, lambda x, y: np.ones_like(x), dm) - 1).max() < 1e-12


def _q0_edge_moments(mesh, k, v):
    """Absolute ``max |int_e (v - Q0 v) p|``, ``p`` in ``P_k(e)``, with an independent Gauss rule."""
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, v, dm)
    t, w = gauss(20)
    r = k + 2
    worst = 0.0
    for e, (a, b) in enumerate(mesh.edges):
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        x = pa + t[:, None] * (pb - pa)
        coeffs = np.concatenate([[nodal[a]], nodal[dm.edge_node_dofs([e])[0]], [nodal[b]]])
        q0 = lagrange_1d(np.linspace(0, 1, r + 1), t) @ coeffs
        L = np.linalg.norm(pb - pa)
        for p in range(k + 1):
            worst = max(worst, abs(L * np.dot(w, (v(x[:, 0], x[:, 1]) - q0) * t**p)))
    return worst


def _q0_volume_moments(mesh, k, v):
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, v, dm)
    pts, w = triangle_rule(10)
    full = lagrange(k + 2, 2).values(pts)
    worst = 0.0
    for t in range(mesh.n_triangles):
        g = element_geometry(mesh, t)
        xy = g.to_physical(pts)
        diff = v(xy[:, 0], xy[:, 1]) - full @ nodal[dm.cell_dofs[t, :full.shape[1]]]
        for a in range(k):
            for b in range(k - a):
                worst = max(worst, abs(abs(g.det_j) * np.dot(w, diff * pts[:, 0] ** a * pts[:, 1] ** b)))
    return worst


def test_edge_mass_x4_k0():
    mesh = generate_uniform_mesh(2)
    assert _q0_edge_moments(mesh, 0, x4) < 1e-11


def test_edge_and_volume_mass_x4_k1():
    mesh = generate_uniform_mesh(2)
    assert _q0_edge_moments(mesh, 1, x4) < 1e-11
    assert _q0_volume_moments(mesh, 1, x4) < 1e-11


@pytest.mark.parametrize("k", [0, 1, 2])
def test_mass_preservation_smooth(k):
    mesh = generate_uniform_mesh(4)
    assert edge_mass_defect(mesh, k) < 1e-10
    assert volume_mass_defect(mesh, k) < 1e-10
    f = lambda x, y: np.exp(x) * np.cos(2 * y)
    assert _q0_edge_moments(mesh, k, f) < 1e-11
    assert _q0_volume_moments(mesh, k, f) < 1e-11


@pytest.mark.parametrize("k", [0, 1, 2])
def test_constraint_identity(k):
    assert constraint_defect(generate_uniform_mesh(4), k) < 1e-10


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2**31 - 1))
def test_mass_preservation_unstructured(k, seed):
    rng = np.random.default_rng(seed)
    m = generate_uniform_mesh(3)
    v = m.vertices.copy()
    v[~m.boundary_vertices] += rng.uniform(-0.08, 0.08, size=(np.count_nonzero(~m.boundary_vertices), 2))
    mesh = mesh_from_arrays(v, m.triangles)
    f = lambda x, y: np.sin(3 * x + 1) * np.exp(y)
    assert _q0_edge_moments(mesh, k, f) < 1e-11
    assert _q0_volume_moments(mesh, k, f) < 1e-11
    assert constraint_defect(mesh, k, f) < 1e-10


@pytest.mark.parametrize("k", [0, 1])
def test_boundary_zero_preserved(k):
    mesh = generate_uniform_mesh(4)
    dm = build_dof_map(mesh, k)
    u = get_case("ex2")
    nodal = scott_zhang(mesh, k, u.u, dm)
    assert np.abs(nodal[dm.boundary_v0]).max() < 1e-14


def _l2_q0_error(mesh, k, u):
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, u, dm)
    pts, w = triangle_rule(10)
    full = lagrange(k + 2, 2).values(pts)
    geom = BatchGeometry.from_mesh(mesh)
    xy = geom.to_physical(pts)
    det = np.abs(np.linalg.det(geom.jacobians))
    diff = u(xy[..., 0], xy[..., 1]) - nodal[dm.cell_dofs[:, :full.shape[1]]] @ full.T
    return np.sqrt(np.sum(det[:, None] * w * diff**2))


@pytest.mark.parametrize("k", [0, 1])
def test_approximation_order(k):
    u = get_case("ex2").u
    errs = [_l2_q0_error(generate_uniform_mesh(n), k, u) for n in (4, 8, 16, 32)]
    rate = np.log2(errs[-2] / errs[-1])
    assert rate == pytest.approx(k + 3, abs=0.2)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_q0_l2_error_matches_oracle(k):
    mesh = generate_uniform_mesh(4)
    u = get_case("ex3").u
    assert q0_l2_error(mesh, k, u) == pytest.approx(_l2_q0_error(mesh, k, u), rel=1e-8)


def test_qn_linear():
    mesh = generate_uniform_mesh(3)
    c = edge_projection_Qn(mesh, 0, lambda x, y: np.stack([np.ones_like(x), np.zeros_like(x)], -1))
    assert np.allclose(c, mesh.edge_normals[:, :1], atol=1e-14)
    vertical = np.abs(mesh.edge_normals[:, 1]) < 1e-14
    assert np.allclose(np.abs(c[vertical]), 1.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_qn_exact_on_polynomials(k):
    mesh = generate_uniform_mesh(2)
    u = random_polynomial_case(k + 2, np.random.default_rng(5))
    c = edge_projection_Qn(mesh, k, u.grad)
    t = np.linspace(0, 1, k + 2)
    for e, (a, b) in enumerate(mesh.edges):
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        x = pa + t[:, None] * (pb - pa)
        assert np.allclose(c[e], u.grad(x[:, 0], x[:, 1]) @ mesh.edge_normals[e], atol=1e-12)


def test_qn_sine_oracle():
    mesh = generate_uniform_mesh(4)
    u = get_case("ex2")
    k = 1
    e = 17
    c = edge_projection_Qn(mesh, k, u.grad, edges=[e])[0]
    t, w = gauss(15)
    pa, pb = mesh.vertices[mesh.edges[e]]
    x = pa + t[:, None] * (pb - pa)
    chi = lagrange_1d(np.linspace(0, 1, k + 2), t)
    M = chi.T @ (w[:, None] * chi)
    rhs = chi.T @ (w * (u.grad(x[:, 0], x[:, 1]) @ mesh.edge_normals[e]))
    assert np.abs(c - np.linalg.solve(M, rhs)).max() < 1e-12


def test_qhk_constant_and_polynomial():
    mesh = generate_uniform_mesh(3)
    geom = BatchGeometry.from_mesh(mesh)
    pts, _ = triangle_rule(5)
    for k in (0, 1, 2):
        c = element_projection_Qhk(mesh, k, lambda x, y: 3.0 * np.ones_like(x))
        vals = np.einsum("eqm,em->eq", pk_values(geom, k, pts), c)
        assert np.allclose(vals, 3.0, atol=1e-13)
        p = random_polynomial_case(k, np.random.default_rng(k))
        c = element_projection_Qhk(mesh, k, p.u)
        vals = np.einsum("eqm,em->eq", pk_values(geom, k, pts), c)
        xy = geom.to_physical(pts)
        assert np.allclose(vals, p.u(xy[..., 0], xy[..., 1]), atol=1e-12)


def test_qhk_cubic_mean():
    verts = np.array([[0.1, 0.2], [0.9, 0.35], [0.3, 1.1]])
    mesh = mesh_from_arrays(verts, np.array([[0, 1, 2]]))
    c = element_projection_Qhk(mesh, 0, lambda x, y: x**3)
    xs = verts[:, 0]
    # mean of x^3 over a triangle: complete homogeneous cubic in the vertex abscissae over 10
    h3 = sum(xs[i] * xs[j] * xs[l] for i in range(3) for j in range(i, 3) for l in range(j, 3))
    mean = pk_values(BatchGeometry.from_mesh(mesh), 0, np.zeros((1, 2)))[0, 0, 0] * c[0, 0]
    assert mean == pytest.approx(h3 / 10, rel=1e-13)


def test_project_qh_zero():
    mesh = generate_uniform_mesh(2)
    z = get_case("zero")
    assert not np.any(project_Qh(mesh, 1, z.u, z.grad).coeffs)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_commuting_identity_polynomials(k):
    mesh = generate_uniform_mesh(4)
    rng = np.random.default_rng(100 + k)
    assert max(commuting_defect(mesh, k, random_polynomial_case(k + 2, rng)) for _ in range(20)) <= 1e-10


@pytest.mark.parametrize("n", [4, 8, 16])
def test_commuting_identity_sine(n):
    assert commuting_defect(generate_uniform_mesh(n), 0, get_case("ex2")) <= 1e-9


def test_qb_zero_and_polynomial():
    mesh = generate_uniform_mesh(4)
    for k in (0, 1):
        dm = build_dof_map(mesh, k)
        assert not np.any(boundary_projection_Qb(mesh, k, lambda x, y: 0 * x, dm))
        p = random_polynomial_case(k + 2, np.random.default_rng(k))
        xy = dm.node_coords[dm.boundary_v0]
        assert np.allclose(boundary_projection_Qb(mesh, k, p.u, dm), p.u(xy[:, 0], xy[:, 1]), atol=1e-12)


def test_qb_dense_oracle():
    mesh = generate_uniform_mesh(4)
    dm = build_dof_map(mesh, 0)
    g = lambda x, y: np.sin(np.pi * x)
    got = boundary_projection_Qb(mesh, 0, g, dm)
    index = {d: i for i, d in enumerate(dm.boundary_v0)}
    nb = len(index)
    M = np.zeros((nb, nb))
    rhs = np.zeros(nb)
    t, w = gauss(15)
    phi = lagrange_1d([0, 0.5, 1], t)
    for e in np.flatnonzero(mesh.boundary_edges):
        a, b = mesh.edges[e]
        dofs = [index[a], index[dm.edge_node_dofs([e])[0, 0]], index[b]]
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        x = pa + t[:, None] * (pb - pa)
        L = np.linalg.norm(pb - pa)
        M[np.ix_(dofs, dofs)] += L * phi.T @ (w[:, None] * phi)
        rhs[dofs] += L * phi.T @ (w * g(x[:, 0], x[:, 1]))
    assert np.abs(got - np.linalg.solve(M, rhs)).max() < 1e-12
