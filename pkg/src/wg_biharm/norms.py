"""Error measures for a computed weak Galerkin solution."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dofs import WeakField
from .polybasis import lagrange, mass_matrix, quadrature_rule
from .projections import DATA_TRI_DEGREE, project_Qh
from .weak_laplacian import BatchGeometry, ElementOperator, element_operators


@dataclass(frozen=True)
class ErrorReport:
    h: float
    e_h1: float  # broken H1 seminorm of u - u0
    e_tb: float  # triple-bar norm of Q_h u - u_h
    e_l2: float  # L2 norm of Q0 u - u0
    e_edge: float  # edge-length weighted L2 norm of Q_n(grad u . n_e) - u_n
    tb_laplacian: float = 0.0  # squared weak-Laplacian part of e_tb
    tb_jump: float = 0.0  # squared stabilizer part of e_tb

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.e_h1, self.e_tb, self.e_l2, self.e_edge


def triple_bar_parts(diff: WeakField, ops: ElementOperator) -> tuple[float, float]:
    """Squared ``sum ||lap_w e||_T^2`` and ``sum h_T^-1 ||grad e0 . n_e - e_n||_dT^2``."""
    loc = diff.local()
    lw = np.einsum("emi,ei->em", ops.L, loc)
    jump = np.einsum("ei,eij,ej->e", loc, ops.S, loc)
    # S is positive semidefinite; clip the roundoff of a vanishing form
    return float(np.sum(lw**2)), max(float(np.sum(jump)), 0.0)


def error_report(mesh, k: int, u_exact, u_h: WeakField, qh: WeakField | None = None,
                 ops: ElementOperator | None = None, tri_degree: int = DATA_TRI_DEGREE,
                 weight: str = "edge") -> ErrorReport:
    """All four error measures.

    With ``e = Q_h u - u_h``::

        e_h1^2   = sum_T ||grad u - grad u_0||_T^2
        e_tb^2   = sum_T ||lap_w e||_T^2 + s(e, e)
        e_l2^2   = sum_T ||Q_0 u - u_0||_T^2
        e_edge^2 = sum_e |e| ||Q_n(grad u . n_e) - u_n||_e^2

    ``s`` is the stabilizer of the scheme (``weight`` as in
    :func:`~wg_biharm.weak_laplacian.element_operators`; ignored when ``ops``
    is given).  ``u_exact`` needs ``u(x, y)`` and ``grad(x, y)`` attributes (a
    :class:`~wg_biharm.cases.ManufacturedCase` works).
    """
    dm = u_h.dofmap
    geom = BatchGeometry.from_mesh(mesh)
    if ops is None:
        ops = element_operators(geom, k, weight=weight)
    if qh is None:
        qh = project_Qh(mesh, k, u_exact.u, u_exact.grad, dm)

    rule = quadrature_rule(tri_degree, 2)
    basis = lagrange(dm.degree, 2)
    phi = basis.values(rule.points)
    gphi = basis.gradients(rule.points)
    jac = geom.jacobians
    det = np.abs(np.linalg.det(jac))
    jinv = np.linalg.inv(jac)
    x = geom.to_physical(rule.points)
    n0 = dm.layout.n0
    c_h = u_h.local()[:, :n0]
    wdet = det[:, None] * rule.weights[None]

    grad_ref = np.einsum("qac,ea->eqc", gphi, c_h)
    grad_h = np.einsum("eqc,ecd->eqd", grad_ref, jinv)
    diff = u_exact.grad(x[..., 0], x[..., 1]) - grad_h
    e_h1 = math.sqrt(float(np.sum(wdet * np.sum(diff**2, axis=-1))))

    d0 = (qh.local()[:, :n0] - c_h) @ phi.T
    e_l2 = math.sqrt(float(np.sum(wdet * d0**2)))

    lap2, jump2 = triple_bar_parts(qh - u_h, ops)
    e_tb = math.sqrt(lap2 + jump2)

    dn = qh.vn - u_h.vn
    m_ref = mass_matrix(lagrange(k + 1, 1))
    e_edge = math.sqrt(float(np.sum(mesh.edge_lengths**2 * np.einsum("ei,ij,ej->e", dn, m_ref, dn))))
    return ErrorReport(mesh.h, e_h1, e_tb, e_l2, e_edge, lap2, jump2)


def estimate_rate(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    """``log(e_coarse / e_fine) / log(ratio)``; NaN when either error is not positive."""
    if not (e_coarse > 0 and e_fine > 0):
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(ratio)


def fit_rate(hs, errors) -> float:
    """Least-squares slope of ``log e`` against ``log h``; NaN if any error is not positive."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) < 2 or np.any(errors <= 0):
        return math.nan
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
