"""Interpolation and projection operators onto the weak Galerkin space.

``scott_zhang`` is a mass-preserving Scott-Zhang quasi-interpolant onto
continuous ``P_{k+2}``: corner values are dual-basis averages over one edge,
edge-interior values are fixed by edge moments against ``P_k``, and
element-interior values by element moments against ``P_{k-1}``.  Together
these give, on every triangle ``T`` and every ``p`` in ``P_k(T)``::

    (Q0 v, lap p)_T - <Q0 v, grad p . n>_dT == (v, lap p)_T - <v, grad p . n>_dT

which is exactly what the discrete weak Laplacian needs to commute with
``Q_h``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .dofs import DofMap, WeakField, build_dof_map
from .mesh import Mesh
from .polybasis import dual_basis, lagrange, mass_matrix, quadrature_rule, subsimplex_basis
from .weak_laplacian import BatchGeometry, orthonormal_basis

# data terms are over-integrated regardless of k
DATA_TRI_DEGREE = 14
DATA_EDGE_DEGREE = 29

CORNER, MIDDLE, INTERNAL = 0, 1, 2


@dataclass(frozen=True, eq=False)
class NodeClassification:
    kind: np.ndarray  # (n_v0,) CORNER / MIDDLE / INTERNAL
    patch: np.ndarray  # edge index for corner/middle nodes, triangle index for internal
    boundary: np.ndarray  # (n_v0,) bool

    def count(self, kind: int) -> int:
        return int(np.count_nonzero(self.kind == kind))


def corner_patches(mesh: Mesh) -> np.ndarray:
    """Averaging edge for every vertex.

    Boundary vertices take their lowest-numbered boundary edge, interior
    vertices their lowest-numbered incident edge.
    """
    ne = mesh.n_edges
    big = np.iinfo(np.int64).max
    patch = np.full(mesh.n_vertices, big, dtype=np.int64)
    eidx = np.arange(ne)
    bnd = mesh.boundary_edges
    for end in (0, 1):
        np.minimum.at(patch, mesh.edges[bnd, end], eidx[bnd])
    interior = ~mesh.boundary_vertices
    free = np.full(mesh.n_vertices, big, dtype=np.int64)
    for end in (0, 1):
        np.minimum.at(free, mesh.edges[:, end], eidx)
    patch[interior] = free[interior]
    return patch


def classify_nodes(mesh: Mesh, k: int, dofmap: DofMap | None = None) -> NodeClassification:
    dm = dofmap or build_dof_map(mesh, k)
    kind = np.empty(dm.n_v0, dtype=np.int8)
    patch = np.empty(dm.n_v0, dtype=np.int64)
    boundary = np.zeros(dm.n_v0, dtype=bool)
    nv = mesh.n_vertices
    kind[:nv] = CORNER
    patch[:nv] = corner_patches(mesh)
    en = dm.edge_node_dofs()
    kind[en] = MIDDLE
    patch[en] = np.arange(mesh.n_edges)[:, None]
    cn = dm.cell_interior_dofs()
    kind[cn] = INTERNAL
    patch[cn] = np.arange(mesh.n_triangles)[:, None]
    boundary[dm.boundary_v0] = True
    return NodeClassification(kind, patch, boundary)


def _edge_points(mesh: Mesh, edges: np.ndarray, t: np.ndarray) -> np.ndarray:
    a = mesh.vertices[mesh.edges[edges, 0]]
    b = mesh.vertices[mesh.edges[edges, 1]]
    return a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]


@lru_cache(maxsize=None)
def _middle_system(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge-moment system: matrix over middle nodes and coupling to the two ends."""
    full = lagrange(r, 1)
    test = subsimplex_basis(r, 1)
    rule = quadrature_rule(2 * r, 1)
    phi = full.values(rule.points)
    p = test.values(rule.points)
    m = np.einsum("q,qi,qj->ij", rule.weights, p, phi)  # (k+1, r+1)
    return m[:, 1:r], m[:, [0, r]]


@lru_cache(maxsize=None)
def _internal_system(r: int) -> tuple[np.ndarray, np.ndarray]:
    full = lagrange(r, 2)
    test = subsimplex_basis(r, 2)
    rule = quadrature_rule(2 * r, 2)
    phi = full.values(rule.points)
    p = test.values(rule.points)
    m = np.einsum("q,qi,qj->ij", rule.weights, p, phi)
    nb = 3 * r
    return m[:, nb:], m[:, :nb]


def scott_zhang(mesh: Mesh, k: int, v, dofmap: DofMap | None = None) -> np.ndarray:
    """Nodal values of ``Q0 v`` in the global ``v0`` numbering.

    ``v`` is a vectorised callable ``v(x, y)``.
    """
    dm = dofmap or build_dof_map(mesh, k)
    r = k + 2
    out = np.zeros(dm.n_v0)
    erule = quadrature_rule(DATA_EDGE_DEGREE, 1)
    t, w = erule.points[:, 0], erule.weights

    # corners: integral of the endpoint dual function against v over the patch edge
    patch = corner_patches(mesh)
    psi = dual_basis(lagrange(r, 1)).values(erule.points)  # (q, r+1)
    at_hi = mesh.edges[patch, 1] == np.arange(mesh.n_vertices)
    x = _edge_points(mesh, patch, t)
    vals = v(x[..., 0], x[..., 1])
    weights = np.where(at_hi[:, None], psi[:, r][None], psi[:, 0][None]) * w
    out[:mesh.n_vertices] = np.sum(weights * vals, axis=1)

    # edge-interior nodes: moments against P_k on every edge
    a_mid, a_end = _middle_system(r)
    test = subsimplex_basis(r, 1).values(erule.points)  # (q, k+1)
    x = _edge_points(mesh, np.arange(mesh.n_edges), t)
    vals = v(x[..., 0], x[..., 1])
    rhs = np.einsum("q,eq,qi->ie", w, vals, test)
    ends = out[mesh.edges]  # (ne, 2)
    rhs -= a_end @ ends.T
    out[dm.edge_node_dofs()] = np.linalg.solve(a_mid, rhs).T

    # element-interior nodes: moments against P_{k-1} on every triangle
    if k >= 1:
        a_int, a_bnd = _internal_system(r)
        trule = quadrature_rule(DATA_TRI_DEGREE, 2)
        geom = BatchGeometry.from_mesh(mesh)
        x = geom.to_physical(trule.points)
        vals = v(x[..., 0], x[..., 1])
        ptest = subsimplex_basis(r, 2).values(trule.points)
        rhs = np.einsum("q,eq,qi->ie", trule.weights, vals, ptest)
        nb = 3 * r
        bnd = out[dm.cell_dofs[:, :nb]]
        rhs -= a_bnd @ bnd.T
        out[dm.cell_interior_dofs()] = np.linalg.solve(a_int, rhs).T
    return out


def edge_projection_Qn(mesh: Mesh, k: int, grad_w, edges=None) -> np.ndarray:
    """(ne, k+2) coefficients of the ``L2(e)`` projection of ``grad w . n_e`` onto ``P_{k+1}(e)``."""
    e = np.arange(mesh.n_edges) if edges is None else np.asarray(edges)
    basis = lagrange(k + 1, 1)
    erule = quadrature_rule(DATA_EDGE_DEGREE, 1)
    chi = basis.values(erule.points)
    x = _edge_points(mesh, e, erule.points[:, 0])
    g = grad_w(x[..., 0], x[..., 1])
    n = mesh.edge_normals[e]
    dn = g[..., 0] * n[:, None, 0] + g[..., 1] * n[:, None, 1]
    rhs = np.einsum("q,eq,qb->be", erule.weights, dn, chi)
    return np.linalg.solve(mass_matrix(basis), rhs).T


def element_projection_Qhk(mesh: Mesh, k: int, s) -> np.ndarray:
    """(nt, dim P_k) coefficients of the elementwise ``L2`` projection.

    Coefficients refer to the element-orthonormal basis used for the weak
    Laplacian, so they compare directly with ``L @ v``.
    """
    geom = BatchGeometry.from_mesh(mesh)
    trule = quadrature_rule(DATA_TRI_DEGREE, 2)
    x = geom.to_physical(trule.points)
    vals = s(x[..., 0], x[..., 1])
    q = orthonormal_basis(k).values(trule.points)
    sd = np.sqrt(np.abs(np.linalg.det(geom.jacobians)))
    return sd[:, None] * np.einsum("q,eq,qm->em", trule.weights, vals, q)


def project_Qh(mesh: Mesh, k: int, u, grad_u, dofmap: DofMap | None = None) -> WeakField:
    """``{Q0 u, Q_n(grad u . n_e)}``."""
    dm = dofmap or build_dof_map(mesh, k)
    coeffs = np.concatenate([scott_zhang(mesh, k, u, dm), edge_projection_Qn(mesh, k, grad_u).ravel()])
    return WeakField(dm, coeffs)


def boundary_projection_Qb(mesh: Mesh, k: int, g, dofmap: DofMap | None = None) -> np.ndarray:
    """Values on ``dofmap.boundary_v0`` of the ``L2(dOmega)`` projection onto continuous ``P_{k+2}`` traces."""
    dm = dofmap or build_dof_map(mesh, k)
    r = k + 2
    bedges = np.flatnonzero(mesh.boundary_edges)
    basis = lagrange(r, 1)
    erule = quadrature_rule(DATA_EDGE_DEGREE, 1)
    phi = basis.values(erule.points)
    m_ref = mass_matrix(basis)
    lengths = mesh.edge_lengths[bedges]
    x = _edge_points(mesh, bedges, erule.points[:, 0])
    vals = g(x[..., 0], x[..., 1])
    loads = lengths[:, None] * np.einsum("q,eq,qa->ea", erule.weights, vals, phi)
    local = np.empty((len(bedges), r + 1), dtype=np.int64)
    local[:, 0] = mesh.edges[bedges, 0]
    local[:, r] = mesh.edges[bedges, 1]
    local[:, 1:r] = dm.edge_node_dofs(bedges)
    # compress to boundary numbering
    index = np.full(dm.n_v0, -1, dtype=np.int64)
    index[dm.boundary_v0] = np.arange(len(dm.boundary_v0))
    loc = index[local]
    nb = len(dm.boundary_v0)
    rows = np.repeat(loc, r + 1, axis=1).ravel()
    cols = np.tile(loc, (1, r + 1)).ravel()
    vals_m = (lengths[:, None, None] * m_ref[None]).ravel()
    M = sp.csc_matrix((vals_m, (rows, cols)), shape=(nb, nb))
    b = np.bincount(loc.ravel(), weights=loads.ravel(), minlength=nb)
    return np.atleast_1d(spsolve(M, b))
