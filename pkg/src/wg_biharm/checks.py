"""Structural identities of the method, as numerical checks.

Each check returns a :class:`CheckResult` holding the measured defect and
the tolerance it is held to; ``wg-biharm verify`` runs :func:`run_all`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble_system
from .cases import ManufacturedCase, get_case, polynomial_case
from .dofs import build_dof_map
from .mesh import Mesh, generate_uniform_mesh
from .polybasis import dual_basis, lagrange, quadrature_rule
from .projections import (DATA_EDGE_DEGREE, DATA_TRI_DEGREE, _edge_points, element_projection_Qhk,
                          project_Qh, scott_zhang)
from .solver import solve_spd
from .weak_laplacian import BatchGeometry, element_operators, orthonormal_basis


@dataclass(frozen=True)
class CheckResult:
    name: str
    defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.defect) and self.defect <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.defect:.3e} (tol {self.tol:.0e})"


def random_polynomial_case(degree: int, rng: np.random.Generator) -> ManufacturedCase:
    """Polynomial of total degree ``degree`` with standard-normal coefficients."""
    c = rng.standard_normal((degree + 1, degree + 1))
    c[np.add.outer(np.arange(degree + 1), np.arange(degree + 1)) > degree] = 0.0
    return polynomial_case(c, name=f"random P{degree}")


def _smooth(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y) + np.exp(x - 0.5 * y)


# ---------------------------------------------------------------------------
# defect measures


def duality_defect(degree: int, dim: int) -> float:
    """``max |int phi_i psi_j - delta_ij|`` for the Lagrange basis of ``degree``."""
    basis = lagrange(degree, dim)
    psi = dual_basis(basis)
    rule = quadrature_rule(2 * degree, dim)
    m = np.einsum("q,qi,qj->ij", rule.weights, basis.values(rule.points), psi.values(rule.points))
    return float(np.abs(m - np.eye(len(basis))).max())


def _q0_on_edges(mesh: Mesh, k: int, nodal: np.ndarray, dm, t: np.ndarray) -> np.ndarray:
    r = k + 2
    ends = nodal[mesh.edges]
    mid = nodal[dm.edge_node_dofs()]
    coeffs = np.concatenate([ends[:, :1], mid, ends[:, 1:]], axis=1)
    # the 1D lattice lists nodes in ascending order: 0, 1/r, ..., 1
    return coeffs @ lagrange(r, 1).values(t[:, None]).T


def edge_mass_defect(mesh: Mesh, k: int, v=_smooth) -> float:
    """``max |int_e (Q0 v - v) p|`` over edges ``e`` and ``p`` in ``P_k(e)``, relative to ``|int_e v p|``."""
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, v, dm)
    rule = quadrature_rule(DATA_EDGE_DEGREE, 1)
    t = rule.points[:, 0]
    x = _edge_points(mesh, np.arange(mesh.n_edges), t)
    exact = v(x[..., 0], x[..., 1])
    approx = _q0_on_edges(mesh, k, nodal, dm, t)
    p = lagrange(k, 1).values(rule.points)
    lengths = mesh.edge_lengths[:, None]
    diff = lengths * np.einsum("q,eq,qi->ei", rule.weights, approx - exact, p)
    ref = lengths * np.einsum("q,eq,qi->ei", rule.weights, np.abs(exact), np.abs(p))
    return float(np.abs(diff).max() / max(ref.max(), 1e-300))


def volume_mass_defect(mesh: Mesh, k: int, v=_smooth) -> float:
    """``max |int_T (Q0 v - v) p|`` over triangles and ``p`` in ``P_{k-1}(T)`` (zero for ``k = 0``)."""
    if k == 0:
        return 0.0
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, v, dm)
    rule = quadrature_rule(DATA_TRI_DEGREE, 2)
    geom = BatchGeometry.from_mesh(mesh)
    x = geom.to_physical(rule.points)
    exact = v(x[..., 0], x[..., 1])
    approx = nodal[dm.cell_dofs[:, :dm.layout.n0]] @ lagrange(k + 2, 2).values(rule.points).T
    p = lagrange(k - 1, 2).values(rule.points)
    det = np.abs(np.linalg.det(geom.jacobians))[:, None]
    diff = det * np.einsum("q,eq,qi->ei", rule.weights, approx - exact, p)
    ref = det * np.einsum("q,eq,qi->ei", rule.weights, np.abs(exact), np.abs(p))
    return float(np.abs(diff).max() / max(ref.max(), 1e-300))


def polynomial_preservation_defect(mesh: Mesh, k: int, rng: np.random.Generator) -> float:
    """``max |Q0 p - p|`` at the nodes for a random ``p`` in ``P_{k+2}``."""
    case = random_polynomial_case(k + 2, rng)
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, case.u, dm)
    xy = dm.node_coords
    exact = case.u(xy[:, 0], xy[:, 1])
    return float(np.abs(nodal - exact).max() / max(np.abs(exact).max(), 1.0))


def q0_l2_error(mesh: Mesh, k: int, v) -> float:
    """``||v - Q0 v||`` over the domain."""
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, v, dm)
    rule = quadrature_rule(DATA_TRI_DEGREE, 2)
    geom = BatchGeometry.from_mesh(mesh)
    x = geom.to_physical(rule.points)
    approx = nodal[dm.cell_dofs[:, :dm.layout.n0]] @ lagrange(k + 2, 2).values(rule.points).T
    det = np.abs(np.linalg.det(geom.jacobians))[:, None]
    return float(np.sqrt(np.sum(det * rule.weights * (v(x[..., 0], x[..., 1]) - approx) ** 2)))


def commuting_defect(mesh: Mesh, k: int, case: ManufacturedCase) -> float:
    """``max |lap_w(Q_h u) - Q_h^k(lap u)|`` over elements, in the element-orthonormal ``P_k`` basis."""
    dm = build_dof_map(mesh, k)
    qh = project_Qh(mesh, k, case.u, case.grad, dm)
    ops = element_operators(BatchGeometry.from_mesh(mesh), k, with_stabilizer=False)
    lhs = np.einsum("emi,ei->em", ops.L, qh.local())
    rhs = element_projection_Qhk(mesh, k, case.lap)
    return float(np.abs(lhs - rhs).max())


def constraint_defect(mesh: Mesh, k: int, v=_smooth) -> float:
    """Mismatch of ``(w, lap p)_T - <w, grad p . n>_dT`` between ``w = Q0 v`` and ``w = v``, ``p`` in ``P_k``."""
    dm = build_dof_map(mesh, k)
    nodal = scott_zhang(mesh, k, v, dm)
    geom = BatchGeometry.from_mesh(mesh)
    q = orthonormal_basis(k)
    jinv = np.linalg.inv(geom.jacobians)
    det = np.abs(np.linalg.det(geom.jacobians))
    local = nodal[dm.cell_dofs[:, :dm.layout.n0]]
    full = lagrange(k + 2, 2)

    trule = quadrature_rule(DATA_TRI_DEGREE, 2)
    x = geom.to_physical(trule.points)
    metric = np.einsum("eab,ecb->eac", jinv, jinv)
    lap_q = np.einsum("qmab,eab->eqm", q.hessians(trule.points), metric)
    w_exact = v(x[..., 0], x[..., 1])
    w_h = local @ full.values(trule.points).T
    vol = det[:, None] * np.einsum("q,eq,eqm->em", trule.weights, w_h - w_exact, lap_q)

    erule = quadrature_rule(DATA_EDGE_DEGREE, 1)
    t = erule.points[:, 0]
    bnd = np.zeros_like(vol)
    lengths, normals = geom.edge_lengths, geom.outward_normals
    for j in range(3):
        a, b = np.eye(3)[j], np.eye(3)[(j + 1) % 3]
        ref = ((1 - t)[:, None] * a + t[:, None] * b)[:, 1:]  # barycentric -> reference (x, y)
        xe = geom.to_physical(ref)
        we = v(xe[..., 0], xe[..., 1]) - local @ full.values(ref).T
        gq = np.einsum("qmc,ecd->eqmd", q.gradients(ref), jinv)
        dqn = np.einsum("eqmd,ed->eqm", gq, normals[:, j])
        bnd += lengths[:, j, None] * np.einsum("q,eq,eqm->em", erule.weights, we, dqn)
    scale = np.sqrt(det)[:, None]  # the orthonormal basis is divided by sqrt|det J|
    defect = (vol + bnd) / scale
    return float(np.abs(defect).max())


def scheme_exactness_defect(mesh: Mesh, k: int, rng: np.random.Generator) -> float:
    """Max nodal error when solving with data from a random ``u`` in ``P_{k+2}``."""
    case = random_polynomial_case(k + 2, rng)
    system = assemble_system(mesh, k, case.f, case.g, case.phi)
    u_h, _ = solve_spd(system)
    xy = u_h.dofmap.node_coords
    exact = case.u(xy[:, 0], xy[:, 1])
    return float(np.abs(u_h.v0 - exact).max() / max(np.abs(exact).max(), 1.0))


def symmetry_defect(mesh: Mesh, k: int) -> float:
    zero = get_case("zero")
    A = assemble_system(mesh, k, zero.f, zero.g, zero.phi).A
    diff = abs(A - A.T).max()
    return float(diff / abs(A).max())


def min_eigenvalue(mesh: Mesh, k: int) -> float:
    zero = get_case("zero")
    A = assemble_system(mesh, k, zero.f, zero.g, zero.phi).A.toarray()
    return float(np.linalg.eigvalsh(A).min())


def run_all(seed: int = 0) -> list[CheckResult]:
    """The full property suite on small uniform meshes."""
    rng = np.random.default_rng(seed)
    out = []
    for dim in (1, 2):
        worst = max(duality_defect(r, dim) for r in range(1, 6))
        out.append(CheckResult(f"dual basis, {dim}D, degrees 1-5", worst, 1e-11))
    mesh = generate_uniform_mesh(4)
    sine = get_case("ex2")
    for k in (0, 1, 2):
        out.append(CheckResult(f"Q0 polynomial preservation, k={k}",
                               polynomial_preservation_defect(mesh, k, rng), 1e-10))
        out.append(CheckResult(f"Q0 edge mass preservation, k={k}", edge_mass_defect(mesh, k), 1e-10))
        if k >= 1:
            out.append(CheckResult(f"Q0 volume mass preservation, k={k}", volume_mass_defect(mesh, k), 1e-10))
        out.append(CheckResult(f"Q0 weak-Laplacian constraint, k={k}", constraint_defect(mesh, k), 1e-10))
        poly = max(commuting_defect(mesh, k, random_polynomial_case(k + 2, rng)) for _ in range(5))
        out.append(CheckResult(f"commuting identity, random P{k + 2}, k={k}", poly, 1e-10))
        out.append(CheckResult(f"commuting identity, sin(pi x)sin(pi y), k={k}",
                               commuting_defect(mesh, k, sine), 1e-9))
        out.append(CheckResult(f"scheme exactness on P{k + 2}, k={k}",
                               scheme_exactness_defect(generate_uniform_mesh(3), k, rng), 1e-9))
        out.append(CheckResult(f"stiffness symmetry, k={k}", symmetry_defect(mesh, k), 1e-13))
    lam = min_eigenvalue(generate_uniform_mesh(2), 0)
    out.append(CheckResult("positive definiteness, n=2, k=0 (-lambda_min)", -lam, 0.0))
    return out
