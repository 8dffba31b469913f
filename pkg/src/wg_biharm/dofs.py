"""Global numbering of the weak Galerkin space and coefficient vectors over it."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh
from .polybasis import lagrange
from .weak_laplacian import BatchGeometry, LocalDofLayout


@dataclass(frozen=True, eq=False)
class DofMap:
    """``v0`` nodes first (vertices, edge-interior nodes, element-interior nodes),
    then one block of ``k + 2`` normal-derivative coefficients per edge.

    Edge-interior nodes are numbered along the edge from its lower to its
    higher global vertex.
    """

    mesh: Mesh
    k: int

    @property
    def layout(self) -> LocalDofLayout:
        return LocalDofLayout(self.k)

    @property
    def degree(self) -> int:
        return self.k + 2

    @property
    def per_edge_nodes(self) -> int:
        return self.degree - 1

    @property
    def per_cell_nodes(self) -> int:
        r = self.degree
        return (r - 1) * (r - 2) // 2

    @property
    def n_v0(self) -> int:
        m = self.mesh
        return m.n_vertices + self.per_edge_nodes * m.n_edges + self.per_cell_nodes * m.n_triangles

    @property
    def n_vn(self) -> int:
        return (self.k + 2) * self.mesh.n_edges

    @property
    def n_total(self) -> int:
        return self.n_v0 + self.n_vn

    def edge_node_dofs(self, edges=None) -> np.ndarray:
        """(ne, r-1) v0 dofs interior to each edge, ordered lo -> hi."""
        e = np.arange(self.mesh.n_edges) if edges is None else np.asarray(edges)
        m = self.per_edge_nodes
        return self.mesh.n_vertices + m * e[:, None] + np.arange(m)[None, :]

    def edge_vn_dofs(self, edges=None) -> np.ndarray:
        e = np.arange(self.mesh.n_edges) if edges is None else np.asarray(edges)
        m = self.k + 2
        return self.n_v0 + m * e[:, None] + np.arange(m)[None, :]

    def cell_interior_dofs(self) -> np.ndarray:
        m = self.per_cell_nodes
        base = self.mesh.n_vertices + self.per_edge_nodes * self.mesh.n_edges
        return base + m * np.arange(self.mesh.n_triangles)[:, None] + np.arange(m)[None, :]

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        """(nt, local size) global index of every local degree of freedom."""
        mesh, lay, r = self.mesh, self.layout, self.degree
        nt = mesh.n_triangles
        out = np.empty((nt, lay.size), dtype=np.int64)
        out[:, :3] = mesh.triangles
        edge_nodes = self.edge_node_dofs(mesh.tri_edges.ravel()).reshape(nt, 3, r - 1)
        flipped = mesh.local_edge_flipped
        col = 3
        for j in range(3):
            nodes = np.where(flipped[:, j, None], edge_nodes[:, j, ::-1], edge_nodes[:, j])
            out[:, col:col + r - 1] = nodes
            col += r - 1
        out[:, col:lay.n0] = self.cell_interior_dofs()
        vn = self.edge_vn_dofs(mesh.tri_edges.ravel()).reshape(nt, 3, self.k + 2)
        for j in range(3):
            out[:, lay.edge_slice(j)] = vn[:, j]
        return out

    @cached_property
    def node_coords(self) -> np.ndarray:
        """Physical position of every v0 node."""
        geom = BatchGeometry.from_mesh(self.mesh)
        pts = geom.to_physical(lagrange(self.degree, 2).nodes)
        out = np.empty((self.n_v0, 2))
        out[self.cell_dofs[:, :self.layout.n0].ravel()] = pts.reshape(-1, 2)
        return out

    @cached_property
    def boundary_v0(self) -> np.ndarray:
        mesh = self.mesh
        b = mesh.boundary_edges
        nodes = np.concatenate([np.flatnonzero(mesh.boundary_vertices),
                                self.edge_node_dofs(np.flatnonzero(b)).ravel()])
        return np.sort(nodes)

    @cached_property
    def boundary_vn(self) -> np.ndarray:
        return self.edge_vn_dofs(np.flatnonzero(self.mesh.boundary_edges)).ravel()

    @cached_property
    def fixed(self) -> np.ndarray:
        return np.concatenate([self.boundary_v0, self.boundary_vn])

    @cached_property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_total, dtype=bool)
        mask[self.fixed] = False
        return np.flatnonzero(mask)


def build_dof_map(mesh: Mesh, k: int) -> DofMap:
    if k < 0:
        raise ValueError("k must be non-negative")
    return DofMap(mesh, k)


@dataclass(frozen=True, eq=False)
class WeakField:
    """Coefficients ``{v0, v_n}`` over a :class:`DofMap`."""

    dofmap: DofMap
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.dofmap.n_total,):
            raise ValueError(f"expected {self.dofmap.n_total} coefficients, got {self.coeffs.shape}")

    @property
    def v0(self) -> np.ndarray:
        return self.coeffs[:self.dofmap.n_v0]

    @property
    def vn(self) -> np.ndarray:
        """(ne, k+2) edge coefficients."""
        return self.coeffs[self.dofmap.n_v0:].reshape(self.dofmap.mesh.n_edges, -1)

    def __sub__(self, other: "WeakField") -> "WeakField":
        return WeakField(self.dofmap, self.coeffs - other.coeffs)

    def local(self) -> np.ndarray:
        """(nt, local size) element-local coefficient vectors."""
        return self.coeffs[self.dofmap.cell_dofs]

    @classmethod
    def zeros(cls, dofmap: DofMap) -> "WeakField":
        return cls(dofmap, np.zeros(dofmap.n_total))


def evaluate_field(u: WeakField, t: int, point) -> tuple[float, np.ndarray]:
    """Value and gradient of the ``v0`` component at a physical point of triangle ``t``."""
    mesh = u.dofmap.mesh
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range")
    p = mesh.vertices[mesh.triangles[t]]
    jac = np.column_stack([p[1] - p[0], p[2] - p[0]])
    ref = np.linalg.solve(jac, np.asarray(point, dtype=float) - p[0])
    basis = lagrange(u.dofmap.degree, 2)
    c = u.coeffs[u.dofmap.cell_dofs[t, :u.dofmap.layout.n0]]
    val = basis.values(ref[None])[0] @ c
    grad_ref = basis.gradients(ref[None])[0].T @ c
    return float(val), np.linalg.solve(jac.T, grad_ref)
