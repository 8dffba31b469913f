"""Lagrange bases, dual bases and quadrature on the reference interval and triangle.

Reference simplices are ``[0, 1]`` and ``{x, y >= 0, x + y <= 1}``.  Every
basis function is stored as a dense monomial coefficient array ``c[a, b]``
(coefficient of ``x**a * y**b``), so derivatives are exact and evaluation is a
single contraction against a monomial table.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 6
MAX_QUAD_DEGREE = 59


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, dim) reference coordinates
    weights: np.ndarray  # (n,)
    degree: int

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@lru_cache(maxsize=None)
def quadrature_rule(degree: int, dim: int) -> QuadratureRule:
    """Quadrature exact for polynomials of total degree ``degree``.

    The interval rule is Gauss-Legendre mapped to ``[0, 1]``.  The triangle rule
    is a collapsed (Duffy) product of Gauss-Jacobi in the collapsed direction
    and Gauss-Legendre in the other, which is exact for any requested degree.
    """
    if degree < 0:
        raise ValueError("quadrature degree must be non-negative")
    if degree > MAX_QUAD_DEGREE:
        raise ValueError(f"quadrature degree {degree} exceeds supported maximum {MAX_QUAD_DEGREE}")
    n = degree // 2 + 1
    t, w = np.polynomial.legendre.leggauss(n)
    s, ws = 0.5 * (t + 1.0), 0.5 * w
    if dim == 1:
        return QuadratureRule(s[:, None], ws, degree)
    if dim != 2:
        raise ValueError("dim must be 1 or 2")
    # weight (1 - u) of the collapse is absorbed by Gauss-Jacobi(alpha=1)
    tj, wj = roots_jacobi(n, 1.0, 0.0)
    u, wu = 0.5 * (tj + 1.0), 0.25 * wj
    uu, vv = np.meshgrid(u, s, indexing="ij")
    ww = np.outer(wu, ws)
    pts = np.column_stack([uu.ravel(), ((1.0 - uu) * vv).ravel()])
    return QuadratureRule(pts, ww.ravel(), degree)


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i, j in zip(*np.nonzero(a)):
        out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def _pad(c: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, size))
    out[:c.shape[0], :c.shape[1]] = c
    return out


def _monomials(points: np.ndarray, size: int) -> np.ndarray:
    """Table ``T[p, a, b] = x_p**a * y_p**b``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x = points[:, 0]
    y = points[:, 1] if points.shape[1] > 1 else np.zeros_like(x)
    px = x[:, None] ** np.arange(size)
    py = y[:, None] ** np.arange(size)
    return px[:, :, None] * py[:, None, :]


def _dx(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    return out


def _dy(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    return out


class PolySet:
    """A finite family of polynomials in monomial form, evaluated in batches."""

    def __init__(self, coeffs: np.ndarray, dim: int):
        self.coeffs = np.asarray(coeffs, dtype=float)  # (nb, s, s)
        self.dim = dim
        self._size = self.coeffs.shape[1]
        c = self.coeffs
        self._gx = np.array([_dx(ci) for ci in c])
        self._gy = np.array([_dy(ci) for ci in c])
        self._hxx = np.array([_dx(g) for g in self._gx])
        self._hxy = np.array([_dy(g) for g in self._gx])
        self._hyy = np.array([_dy(g) for g in self._gy])

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def _apply(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        return np.einsum("pab,jab->pj", _monomials(points, self._size), coeffs)

    def values(self, points) -> np.ndarray:
        return self._apply(self.coeffs, points)

    def gradients(self, points) -> np.ndarray:
        g = [self._apply(self._gx, points)]
        if self.dim == 2:
            g.append(self._apply(self._gy, points))
        return np.stack(g, axis=-1)

    def hessians(self, points) -> np.ndarray:
        hxx = self._apply(self._hxx, points)
        if self.dim == 1:
            return hxx[..., None, None]
        hxy = self._apply(self._hxy, points)
        hyy = self._apply(self._hyy, points)
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    def laplacians(self, points) -> np.ndarray:
        return np.trace(self.hessians(points), axis1=-2, axis2=-1)


def lattice_nodes(degree: int, dim: int) -> np.ndarray:
    """Equispaced nodes in canonical order.

    Intervals use ascending order ``i / r``.  Triangles list the three
    vertices, then the ``r - 1`` interior nodes of local edge ``j`` (from vertex
    ``j`` towards vertex ``j + 1``) for ``j = 0, 1, 2``, then interior nodes.
    """
    r = degree
    if r == 0:
        return np.full((1, dim), 1.0 / (dim + 1))
    if dim == 1:
        return (np.arange(r + 1) / r)[:, None]
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = [v for v in verts]
    for j in range(3):
        a, b = verts[j], verts[(j + 1) % 3]
        nodes.extend(a + s / r * (b - a) for s in range(1, r))
    for j in range(1, r):
        for i in range(1, r - j):
            nodes.append(np.array([i / r, j / r]))
    return np.array(nodes)


class LagrangeBasis(PolySet):
    """Nodal basis of ``P_r`` on the reference simplex."""

    def __init__(self, degree: int, dim: int):
        if degree < 0 or degree > MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
        if dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        self.degree = degree
        self.nodes = lattice_nodes(degree, dim)
        size = degree + 1
        if dim == 1:
            bary = [np.array([[1.0], [-1.0]]), np.array([[0.0], [1.0]])]
        else:
            bary = [np.array([[1.0, -1.0], [-1.0, 0.0]]),
                    np.array([[0.0, 0.0], [1.0, 0.0]]),
                    np.array([[0.0, 1.0], [0.0, 0.0]])]
        coeffs = []
        self._multi = []
        for node in self.nodes:
            if degree == 0:
                coeffs.append(_pad(np.ones((1, 1)), size))
                continue
            idx = np.rint(node * degree).astype(int)
            multi = [degree - idx.sum(), *idx]
            self._multi.append(multi)
            c = np.ones((1, 1))
            for lam, a in zip(bary, multi):
                for s in range(a):
                    factor = degree * lam
                    factor[0, 0] -= s
                    c = _mul(c, factor / (s + 1))
            coeffs.append(_pad(c, size))
        super().__init__(np.array(coeffs), dim)

    def values(self, points) -> np.ndarray:
        # product form in barycentric coordinates; better conditioned than
        # summing monomials at higher degree
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.degree == 0:
            return np.ones((points.shape[0], 1))
        lam = np.concatenate([1.0 - points.sum(axis=1, keepdims=True), points], axis=1)
        r = self.degree
        out = np.ones((points.shape[0], len(self._multi)))
        for j, multi in enumerate(self._multi):
            for lam_i, a in zip(lam.T, multi):
                for s in range(a):
                    out[:, j] *= (r * lam_i - s) / (s + 1)
        return out

    def __repr__(self) -> str:
        return f"LagrangeBasis(degree={self.degree}, dim={self.dim})"


def eval_shape(basis: PolySet, point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values, gradients and Laplacians of every basis function at one point."""
    p = np.atleast_2d(np.asarray(point, dtype=float)).reshape(1, -1)
    return basis.values(p)[0], basis.gradients(p)[0], basis.laplacians(p)[0]


@lru_cache(maxsize=None)
def lagrange(degree: int, dim: int) -> LagrangeBasis:
    return LagrangeBasis(degree, dim)


def mass_matrix(basis: PolySet, weight: Optional[Callable] = None,
                weight_degree: int = 2, vertices=None) -> np.ndarray:
    """``M[i, j] = integral of phi_i * phi_j * w`` over the simplex.

    ``vertices`` (dim + 1 points) selects a mapped simplex; the weight is
    evaluated at reference coordinates.
    """
    degree = 2 * (basis.coeffs.shape[1] - 1) + (weight_degree if weight is not None else 0)
    rule = quadrature_rule(degree, basis.dim)
    phi = basis.values(rule.points)
    w = rule.weights.copy()
    if weight is not None:
        w = w * weight(rule.points)
    if vertices is not None:
        v = np.asarray(vertices, dtype=float)
        jac = (v[1:] - v[0]).T
        w = w * abs(np.linalg.det(jac))
    return np.einsum("q,qi,qj->ij", w, phi, phi)


@dataclass(frozen=True)
class DualBasis:
    """``psi_j = sum_i coeffs[i, j] * phi_i`` with ``int phi_i psi_j = delta_ij``."""

    basis: LagrangeBasis
    coeffs: np.ndarray

    def values(self, points) -> np.ndarray:
        return self.basis.values(points) @ self.coeffs

    def monomial_coeffs(self) -> np.ndarray:
        return np.einsum("iab,ij->jab", self.basis.coeffs, self.coeffs)


def dual_basis(basis: LagrangeBasis, vertices=None) -> DualBasis:
    m = mass_matrix(basis, vertices=vertices)
    # Lagrange mass matrices are nonsingular; failure here means a basis bug
    return DualBasis(basis, np.linalg.solve(m, np.eye(len(basis))))


def bubble_weighted_system(degree: int) -> np.ndarray:
    """Middle-node system on an edge carrying ``P_degree`` nodes.

    Entry ``[i, j]`` is the integral over ``[0, 1]`` of the ``i``-th
    middle-node basis function of ``P_degree`` against the ``j``-th Lagrange
    function of ``P_{degree-2}`` on the sub-interval spanned by the middle nodes.
    Equivalently, a sub-interval mass matrix with positive weight
    ``x(1-x) / b(x_i)``, row-scaled per middle node.
    """
    full = lagrange(degree, 1)
    sub = subsimplex_basis(degree, 1)
    rule = quadrature_rule(2 * degree, 1)
    mid = full.values(rule.points)[:, 1:degree]
    return np.einsum("q,qi,qj->ij", rule.weights, mid, sub.values(rule.points))


class MappedBasis(PolySet):
    """A reference Lagrange basis transported onto a scaled, shifted sub-simplex."""

    def __init__(self, basis: LagrangeBasis, origin, scale: float):
        self.basis = basis
        self.origin = np.asarray(origin, dtype=float)
        self.scale = float(scale)
        self.nodes = self.origin + self.scale * basis.nodes
        self.dim = basis.dim

    def __len__(self) -> int:
        return len(self.basis)

    def _map(self, points):
        return (np.atleast_2d(points) - self.origin) / self.scale

    def values(self, points):
        return self.basis.values(self._map(points))

    def gradients(self, points):
        return self.basis.gradients(self._map(points)) / self.scale

    def hessians(self, points):
        return self.basis.hessians(self._map(points)) / self.scale**2


@lru_cache(maxsize=None)
def subsimplex_basis(degree: int, dim: int) -> MappedBasis:
    """Lagrange basis of degree ``degree - dim - 1`` on the simplex of interior nodes.

    The interior nodes of ``P_degree`` form a smaller equispaced lattice; this
    is the test space used to fix the middle (``dim == 1``) or internal
    (``dim == 2``) nodal values.
    """
    sub_degree = degree - dim - 1
    if sub_degree < 0:
        raise ValueError("simplex has no interior nodes")
    origin = np.full(dim, 1.0 / degree)
    scale = sub_degree / degree if sub_degree > 0 else 1.0
    basis = lagrange(sub_degree, dim)
    if sub_degree == 0:
        # a single node; shift the centroid node onto it
        origin = origin - basis.nodes[0]
    return MappedBasis(basis, origin, scale)
