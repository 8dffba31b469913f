"""Global assembly of the weak Galerkin system and essential boundary conditions."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .dofs import DofMap, WeakField, build_dof_map
from .mesh import Mesh
from .polybasis import lagrange, quadrature_rule
from .projections import DATA_TRI_DEGREE, boundary_projection_Qb, edge_projection_Qn
from .weak_laplacian import BatchGeometry, ElementOperator, element_operators


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """Free-DOF system ``A x = b`` plus the fixed boundary values it was lifted from."""

    A: sp.csr_matrix
    b: np.ndarray
    lifting: np.ndarray  # full-length vector, nonzero only on fixed dofs
    dofmap: DofMap
    operators: ElementOperator | None = None

    @property
    def n_free(self) -> int:
        return self.A.shape[0]

    def expand(self, x_free: np.ndarray) -> WeakField:
        full = self.lifting.copy()
        full[self.dofmap.free] = x_free
        return WeakField(self.dofmap, full)


def assemble_matrix(dofmap: DofMap, ops: ElementOperator) -> sp.csr_matrix:
    """Sum of element stiffness matrices over the full dof range (elements in order)."""
    K = ops.K
    K = 0.5 * (K + K.transpose(0, 2, 1))
    cd = dofmap.cell_dofs
    n = cd.shape[1]
    rows = np.repeat(cd, n, axis=1).ravel()
    cols = np.tile(cd, (1, n)).ravel()
    A = sp.coo_matrix((K.ravel(), (rows, cols)), shape=(dofmap.n_total,) * 2).tocsr()
    A.sum_duplicates()
    return A


def load_vector(dofmap: DofMap, f) -> np.ndarray:
    """``(f, v0)`` for every v0 basis function (full dof length, zero on v_n)."""
    mesh = dofmap.mesh
    geom = BatchGeometry.from_mesh(mesh)
    rule = quadrature_rule(DATA_TRI_DEGREE, 2)
    x = geom.to_physical(rule.points)
    fv = f(x[..., 0], x[..., 1])
    phi = lagrange(dofmap.degree, 2).values(rule.points)
    det = np.abs(np.linalg.det(geom.jacobians))
    local = det[:, None] * np.einsum("q,eq,qa->ea", rule.weights, fv, phi)
    n0 = dofmap.layout.n0
    return np.bincount(dofmap.cell_dofs[:, :n0].ravel(), weights=local.ravel(),
                       minlength=dofmap.n_total)


def boundary_values(dofmap: DofMap, g, phi) -> np.ndarray:
    """Full-length vector holding ``Q_b g`` on boundary v0 and ``(n . n_e) Q_n phi`` on boundary v_n.

    ``phi(x, y, normal)`` is the outward normal derivative datum.
    """
    mesh, k = dofmap.mesh, dofmap.k
    out = np.zeros(dofmap.n_total)
    out[dofmap.boundary_v0] = boundary_projection_Qb(mesh, k, g, dofmap)
    bedges = np.flatnonzero(mesh.boundary_edges)
    if len(bedges):
        # outward normal of the single neighbour, as sigma * n_e
        tri = mesh.edge_triangles[bedges, 0]
        local = np.argmax(mesh.tri_edges[tri] == bedges[:, None], axis=1)
        sigma = mesh.edge_signs[tri, local]
        normal = sigma[:, None] * mesh.edge_normals[bedges]

        def data(x, y):
            n = np.broadcast_to(normal[:, None, :], x.shape + (2,))
            val = phi(x, y, n)
            # grad-like wrapper so edge_projection_Qn can take n_e components
            return val[..., None] * mesh.edge_normals[bedges][:, None, :]

        # (phi n_e) . n_e = phi, so this projects phi itself
        coeffs = edge_projection_Qn(mesh, k, data, bedges)
        out[dofmap.boundary_vn] = (sigma[:, None] * coeffs).ravel()
    return out


def assemble_system(mesh: Mesh, k: int, f, g, phi, dofmap: DofMap | None = None,
                    weight: str = "edge") -> SparseSystem:
    """Stiffness restricted to free dofs, with boundary data moved to the right-hand side.

    ``weight`` selects the stabilizer's local mesh size (see
    :func:`~wg_biharm.weak_laplacian.element_operators`).
    """
    dm = dofmap or build_dof_map(mesh, k)
    ops = element_operators(BatchGeometry.from_mesh(mesh), k, weight=weight)
    A_full = assemble_matrix(dm, ops)
    F = load_vector(dm, f)
    lifting = boundary_values(dm, g, phi)
    free = dm.free
    A_ff = A_full[free][:, free].tocsr()
    b = F[free] - A_full[free] @ lifting
    return SparseSystem(A_ff, b, lifting, dm, ops)


def dump_system(system: SparseSystem, directory, stem: str = "system") -> tuple[Path, Path]:
    """Write ``A`` and ``b`` in Matrix Market coordinate format."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    pa, pb = d / f"{stem}_A.mtx", d / f"{stem}_b.mtx"
    scipy.io.mmwrite(pa, system.A.tocoo(), symmetry="symmetric")
    scipy.io.mmwrite(pb, sp.coo_matrix(system.b[:, None]))
    return pa, pb
