"""Element-local discrete weak Laplacian, stabilizer and stiffness.

Local degrees of freedom on a triangle are ordered as

* ``n0 = (k+3)(k+4)/2`` nodal values of ``v0`` in the reference ``P_{k+2}``
  ordering of :func:`wg_biharm.polybasis.lattice_nodes`;
* for local edges ``j = 0, 1, 2``, ``k + 2`` coefficients of ``v_n`` in the
  ``P_{k+1}`` Lagrange basis on that edge, parametrised from the lower to the
  higher global vertex so both neighbours share them.

The weak Laplacian lands in ``P_k(T)`` expressed in an ``L2(T)``-orthonormal
basis (an orthonormalised monomial basis on the reference triangle, pulled
back and scaled by ``|det J|**-1/2``), so its mass matrix is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import ElementGeometry, Mesh
from .polybasis import PolySet, lagrange, quadrature_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class LocalDofLayout:
    k: int

    @property
    def n0(self) -> int:
        return (self.k + 3) * (self.k + 4) // 2

    @property
    def n_edge(self) -> int:
        return self.k + 2

    @property
    def size(self) -> int:
        return self.n0 + 3 * self.n_edge

    @property
    def n_test(self) -> int:
        return (self.k + 1) * (self.k + 2) // 2

    def edge_slice(self, j: int) -> slice:
        start = self.n0 + j * self.n_edge
        return slice(start, start + self.n_edge)


@lru_cache(maxsize=None)
def orthonormal_basis(k: int) -> PolySet:
    """Monomials of degree <= k on the reference triangle, orthonormalised."""
    size = k + 1
    mons = []
    for total in range(k + 1):
        for b in range(total + 1):
            c = np.zeros((size, size))
            c[total - b, b] = 1.0
            mons.append(c)
    mons = np.array(mons)
    raw = PolySet(mons, 2)
    rule = quadrature_rule(2 * k, 2)
    v = raw.values(rule.points)
    gram = np.einsum("q,qi,qj->ij", rule.weights, v, v)
    chol = np.linalg.cholesky(gram)
    coeffs = np.einsum("ij,jab->iab", np.linalg.inv(chol), mons)
    return PolySet(coeffs, 2)


def edge_points(j: int, s: np.ndarray) -> np.ndarray:
    a, b = REF_VERTICES[j], REF_VERTICES[(j + 1) % 3]
    return a + np.asarray(s)[:, None] * (b - a)


@dataclass(frozen=True)
class _Tables:
    tri_w: np.ndarray
    tri_phi: np.ndarray  # (q, n0)
    tri_hess_q: np.ndarray  # (q, nk, 2, 2)
    edge_w: np.ndarray  # (qe,)
    edge_phi: np.ndarray  # (3, qe, n0)
    edge_gphi: np.ndarray  # (3, qe, n0, 2)
    edge_q: np.ndarray  # (3, qe, nk)
    edge_gq: np.ndarray  # (3, qe, nk, 2)
    chi: np.ndarray  # (2, qe, k+2): [same orientation, reversed]


@lru_cache(maxsize=None)
def _tables(k: int) -> _Tables:
    full = lagrange(k + 2, 2)
    test = orthonormal_basis(k)
    edge = lagrange(k + 1, 1)
    tri = quadrature_rule(2 * k + 4, 2)
    erule = quadrature_rule(2 * k + 4, 1)
    s = erule.points[:, 0]
    pts = [edge_points(j, s) for j in range(3)]
    return _Tables(
        tri_w=tri.weights,
        tri_phi=full.values(tri.points),
        tri_hess_q=test.hessians(tri.points),
        edge_w=erule.weights,
        edge_phi=np.array([full.values(p) for p in pts]),
        edge_gphi=np.array([full.gradients(p) for p in pts]),
        edge_q=np.array([test.values(p) for p in pts]),
        edge_gq=np.array([test.gradients(p) for p in pts]),
        chi=np.array([edge.values(s[:, None]), edge.values(1.0 - s[:, None])]),
    )


@dataclass(frozen=True)
class ElementOperator:
    """Batched local operators; leading axis runs over elements."""

    L: np.ndarray  # (E, n_test, size)
    S: np.ndarray  # (E, size, size)

    @property
    def K(self) -> np.ndarray:
        return np.einsum("emi,emj->eij", self.L, self.L) + self.S


@dataclass(frozen=True)
class BatchGeometry:
    vertices: np.ndarray  # (E, 3, 2)
    flipped: np.ndarray  # (E, 3) bool
    signs: np.ndarray  # (E, 3)

    @classmethod
    def from_mesh(cls, mesh: Mesh, elements=None) -> "BatchGeometry":
        idx = np.arange(mesh.n_triangles) if elements is None else np.asarray(elements)
        return cls(mesh.vertices[mesh.triangles[idx]], mesh.local_edge_flipped[idx],
                   mesh.edge_signs[idx])

    @classmethod
    def from_element(cls, geom: ElementGeometry) -> "BatchGeometry":
        return cls(geom.vertices[None], np.asarray(geom.flipped)[None],
                   np.asarray(geom.signs, dtype=float)[None])

    @property
    def jacobians(self) -> np.ndarray:
        p = self.vertices
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)

    def to_physical(self, ref_points) -> np.ndarray:
        """(E, npts, 2) images of reference points."""
        return self.vertices[:, None, 0] + np.einsum("eab,pb->epa", self.jacobians, ref_points)

    @property
    def edge_vectors(self) -> np.ndarray:
        p = self.vertices
        return p[:, [1, 2, 0]] - p

    @property
    def edge_lengths(self) -> np.ndarray:
        d = self.edge_vectors
        return np.hypot(d[..., 0], d[..., 1])

    @property
    def outward_normals(self) -> np.ndarray:
        d = self.edge_vectors
        return np.stack([d[..., 1], -d[..., 0]], axis=-1) / self.edge_lengths[..., None]

    @property
    def diameters(self) -> np.ndarray:
        return self.edge_lengths.max(axis=1)


STABILIZER_WEIGHTS = ("edge", "diameter")


def _check_weight(weight: str) -> None:
    if weight not in STABILIZER_WEIGHTS:
        raise ValueError(f"unknown stabilizer weight {weight!r}; choose from {', '.join(STABILIZER_WEIGHTS)}")


def element_operators(geom: BatchGeometry, k: int, with_stabilizer: bool = True,
                      weight: str = "edge") -> ElementOperator:
    """Weak-Laplacian lifting ``L`` and stabilizer ``S`` for a batch of triangles.

    Parameters
    ----------
    weight : {"edge", "diameter"}
        Local mesh size in the ``h^-1`` factor of the stabilizer: the length
        of the edge being integrated over (default) or the element diameter.
    """
    _check_weight(weight)
    lay = LocalDofLayout(k)
    tb = _tables(k)
    E = geom.vertices.shape[0]
    jac = geom.jacobians
    det = np.linalg.det(jac)
    jinv = np.linalg.inv(jac)
    metric = np.einsum("eab,ecb->eac", jinv, jinv)
    sd = np.sqrt(np.abs(det))
    lengths = geom.edge_lengths
    normals = geom.outward_normals
    # reference-space direction dual to each outward normal: grad_x f . n = grad_ref f . (J^-1 n)
    jn = np.einsum("eab,ejb->eja", jinv, normals)
    hT = geom.diameters[:, None] * np.ones(3) if weight == "diameter" else lengths

    L = np.zeros((E, lay.n_test, lay.size))
    lap_q = np.einsum("qmab,eab->eqm", tb.tri_hess_q, metric)
    L[:, :, :lay.n0] = sd[:, None, None] * np.einsum("q,qa,eqm->ema", tb.tri_w, tb.tri_phi, lap_q)

    S = np.zeros((E, lay.size, lay.size)) if with_stabilizer else None
    for j in range(3):
        w = tb.edge_w
        dqn = np.einsum("smc,ec->esm", tb.edge_gq[j], jn[:, j])
        L[:, :, :lay.n0] -= (lengths[:, j] / sd)[:, None, None] * np.einsum(
            "s,sa,esm->ema", w, tb.edge_phi[j], dqn)
        chi = np.where(geom.flipped[:, j, None, None], tb.chi[1][None], tb.chi[0][None])
        L[:, :, lay.edge_slice(j)] = (geom.signs[:, j] * lengths[:, j] / sd)[:, None, None] * np.einsum(
            "s,esb,sm->emb", w, chi, tb.edge_q[j])
        if with_stabilizer:
            dn = geom.signs[:, j, None, None] * np.einsum("sac,ec->esa", tb.edge_gphi[j], jn[:, j])
            rows = np.zeros((E, len(w), lay.size))
            rows[:, :, :lay.n0] = dn
            rows[:, :, lay.edge_slice(j)] = -chi
            S += (lengths[:, j] / hT[:, j])[:, None, None] * np.einsum("s,esi,esj->eij", w, rows, rows)
    return ElementOperator(L, S)


def local_weak_laplacian(geom: ElementGeometry, k: int) -> np.ndarray:
    """Matrix taking local weak-function coefficients to ``P_k`` coefficients of its weak Laplacian."""
    return element_operators(BatchGeometry.from_element(geom), k, with_stabilizer=False).L[0]


def local_stabilization(geom: ElementGeometry, k: int, weight: str = "edge") -> np.ndarray:
    """Stabilizer matrix ``S`` with ``v^T S v = sum_e h^-1 ||grad v0 . n_e - v_n||_e^2``."""
    return element_operators(BatchGeometry.from_element(geom), k, weight=weight).S[0]


def local_stiffness(geom: ElementGeometry, k: int, weight: str = "edge") -> np.ndarray:
    """``K = L^T L + S``."""
    return element_operators(BatchGeometry.from_element(geom), k, weight=weight).K[0]


def pk_values(geom: BatchGeometry, k: int, ref_points) -> np.ndarray:
    """Values (E, npts, n_test) of the element-orthonormal ``P_k`` basis."""
    sd = np.sqrt(np.abs(np.linalg.det(geom.jacobians)))
    return orthonormal_basis(k).values(ref_points)[None] / sd[:, None, None]


def compatible_local_vector(geom: ElementGeometry, k: int, u, grad_u) -> np.ndarray:
    """Local coefficients of a smooth ``u``: nodal ``v0`` and ``v_n`` interpolating ``grad u . n_e``.

    Exact (equal to the projected data) whenever ``u`` is in ``P_{k+2}``.
    """
    lay = LocalDofLayout(k)
    full = lagrange(k + 2, 2)
    x = geom.to_physical(full.nodes)
    v = np.zeros(lay.size)
    v[:lay.n0] = u(x[:, 0], x[:, 1])
    t = lagrange(k + 1, 1).nodes[:, 0]
    for j in range(3):
        s = 1.0 - t if geom.flipped[j] else t
        p = geom.to_physical(edge_points(j, s))
        n_e = geom.signs[j] * geom.outward_normals[j]
        g = grad_u(p[:, 0], p[:, 1])
        v[lay.edge_slice(j)] = g[..., 0] * n_e[0] + g[..., 1] * n_e[1]
    return v


__all__ = [
    "LocalDofLayout", "ElementOperator", "BatchGeometry", "element_operators",
    "local_weak_laplacian", "local_stabilization", "local_stiffness",
    "orthonormal_basis", "compatible_local_vector", "edge_points", "pk_values",
    "STABILIZER_WEIGHTS",
]
