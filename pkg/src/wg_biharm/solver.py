"""Solution of the assembled symmetric positive definite system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.sparse.linalg import norm as spnorm

from .assembly import SparseSystem
from .dofs import WeakField


class NotSPDError(RuntimeError):
    """The factorization met a non-positive pivot; the assembled matrix is not SPD."""


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a solve.

    ``residual`` is ``||b - A x|| / ||b||``.  ``backward_error`` is the
    normwise backward error ``||r||_inf / (||A||_inf ||x||_inf + ||b||_inf)``;
    on fine meshes of this fourth-order problem the relative residual
    bottoms out near ``eps * cond(A)``, and a solve is accepted once either
    quantity is within tolerance.
    """

    method: str
    iterations: int
    residual: float
    backward_error: float = 0.0


def _measures(A, x, b) -> tuple[float, float]:
    r = b - A @ x
    nb = np.linalg.norm(b)
    res = float(np.linalg.norm(r) / nb) if nb > 0 else float(np.linalg.norm(r))
    scale = spnorm(A, np.inf) * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0)
    bwd = float(np.abs(r).max(initial=0.0) / scale) if scale > 0 else 0.0
    return res, bwd


def _direct(A: sp.csr_matrix, b: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    # symmetric mode keeps the fill-reducing permutation symmetric and pivots on
    # the diagonal, so U's diagonal carries the LDL^T pivots
    lu = splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
              options={"SymmetricMode": True})
    piv = lu.U.diagonal()
    if np.any(piv <= 0):
        raise NotSPDError(f"matrix not SPD: {np.count_nonzero(piv <= 0)} non-positive pivots "
                          f"(min {piv.min():.3e})")
    x = lu.solve(b)
    # iterative refinement; stops once converged or at the roundoff floor
    refinements = 0
    res, bwd = _measures(A, x, b)
    for _ in range(3):
        if res <= tol or bwd <= tol:
            break
        x_new = x + lu.solve(b - A @ x)
        res_new, bwd_new = _measures(A, x_new, b)
        refinements += 1
        if res_new >= res:
            break
        x, res, bwd = x_new, res_new, bwd_new
    return x, refinements


def _cg(A: sp.csr_matrix, b: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    # Jacobi-preconditioned CG, written out so that a non-positive curvature
    # p^T A p (an indefinite matrix) is caught instead of silently iterated
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotSPDError("matrix not SPD: non-positive diagonal entry")
    x = np.zeros_like(b)
    r = b.copy()
    z = r / d
    p = z.copy()
    rz = r @ z
    target = tol * np.linalg.norm(b)
    for it in range(1, 50 * A.shape[0] + 1):
        q = A @ p
        curv = p @ q
        if curv <= 0:
            raise NotSPDError(f"matrix not SPD: non-positive curvature {curv:.3e} in conjugate gradients")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * q
        if np.linalg.norm(r) <= target:
            return x, it
        z = r / d
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise RuntimeError(f"conjugate gradients did not converge in {50 * A.shape[0]} iterations")


SOLVERS = ("direct", "cg")


def solve_matrix(A, b, tol: float = 1e-12, method: str = "direct") -> tuple[np.ndarray, SolveReport]:
    """Solve an SPD system ``A x = b``.

    Parameters
    ----------
    tol : float
        Target relative residual, in ``(0, 1e-6]``.
    method : {"direct", "cg"}
        Sparse factorization with a fill-reducing ordering, or conjugate
        gradients with a Jacobi preconditioner.

    Raises
    ------
    NotSPDError
        A non-positive pivot or a CG breakdown.
    RuntimeError
        Neither the relative residual nor the backward error reached ``tol``.
    """
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    if method not in SOLVERS:
        raise ValueError(f"unknown solver {method!r}; choose from {', '.join(SOLVERS)}")
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return np.zeros_like(b), SolveReport(method, 0, 0.0, 0.0)
    x, its = _direct(A, b, tol) if method == "direct" else _cg(A, b, tol)
    res, bwd = _measures(A, x, b)
    if res > tol and bwd > tol:
        raise RuntimeError(f"{method} solve stalled: relative residual {res:.3e}, "
                           f"backward error {bwd:.3e} (tol {tol:.1e}, {A.shape[0]} unknowns)")
    return x, SolveReport(method, its, res, bwd)


def solve_spd(system: SparseSystem, tol: float = 1e-12, method: str = "direct") -> tuple[WeakField, SolveReport]:
    """Solve for the free dofs and re-insert the boundary values."""
    x, report = solve_matrix(system.A, system.b, tol, method)
    return system.expand(x), report
