"""Conforming triangular meshes, edge orientation and element geometry."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Raised for unreadable files or invalid connectivity."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with derived edge topology.

    Local edge ``j`` of a triangle joins its vertices ``j`` and ``(j + 1) % 3``.
    Every global edge is stored as ``(lo, hi)`` with ``lo < hi``; its normal
    ``n_e`` is the unit tangent ``lo -> hi`` rotated by +90 degrees.
    """

    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    edges: np.ndarray  # (ne, 2), sorted vertex pairs
    edge_normals: np.ndarray  # (ne, 2)
    edge_triangles: np.ndarray  # (ne, 2), -1 where absent
    tri_edges: np.ndarray  # (nt, 3) global edge of each local edge
    h: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Boolean mask; an edge is on the boundary iff it has one neighbour."""
        return self.edge_triangles[:, 1] < 0

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges[self.boundary_edges].ravel()] = True
        return mask

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def diameters(self) -> np.ndarray:
        return self.edge_lengths[self.tri_edges].max(axis=1)

    @cached_property
    def local_edge_flipped(self) -> np.ndarray:
        """True where local edge ``j`` runs from the higher to the lower global vertex."""
        t = self.triangles
        return t[:, [0, 1, 2]] > t[:, [1, 2, 0]]

    @cached_property
    def edge_signs(self) -> np.ndarray:
        """``sigma = n . n_e`` for each (triangle, local edge); exactly +-1."""
        # CCW ordering: outward normal is the local tangent rotated by -90 deg,
        # n_e is the global tangent rotated by +90 deg.
        return np.where(self.local_edge_flipped, 1.0, -1.0)


def _from_connectivity(vertices: np.ndarray, triangles: np.ndarray, h: float) -> Mesh:
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64).copy()
    nv = len(vertices)
    if triangles.size == 0:
        raise MeshError("mesh has no triangles")
    if triangles.min() < 0 or triangles.max() >= nv:
        raise MeshError("triangle references a vertex index out of range")
    p = vertices[triangles]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    scale = max(np.ptp(vertices[:, 0]), np.ptp(vertices[:, 1]), 1e-300) ** 2
    if np.any(np.abs(area2) <= 1e-14 * scale):
        bad = int(np.flatnonzero(np.abs(area2) <= 1e-14 * scale)[0])
        raise MeshError(f"triangle {bad} has zero area")
    cw = area2 < 0
    triangles[cw] = triangles[cw][:, [0, 2, 1]]

    if len(np.unique(np.sort(triangles, axis=1), axis=0)) != len(triangles):
        raise MeshError("repeated triangle")
    local = np.stack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts > 2):
        raise MeshError(f"non-conforming connectivity: edge {edges[np.argmax(counts)].tolist()} "
                        f"has {counts.max()} adjacent triangles")
    tri_edges = inverse.reshape(-1, 3)
    edge_triangles = np.full((len(edges), 2), -1, dtype=np.int64)
    owner = np.repeat(np.arange(len(triangles)), 3)
    order = np.argsort(inverse, kind="stable")
    slot = np.zeros(len(inverse), dtype=np.int64)
    sorted_inv = inverse[order]
    first = np.r_[True, sorted_inv[1:] != sorted_inv[:-1]]
    slot[order] = np.where(first, 0, 1)
    edge_triangles[inverse, slot] = owner

    tangent = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    tangent /= np.hypot(tangent[:, 0], tangent[:, 1])[:, None]
    normals = np.column_stack([-tangent[:, 1], tangent[:, 0]])

    if h is None:
        lengths = np.hypot(*(vertices[edges[:, 1]] - vertices[edges[:, 0]]).T)
        h = float(lengths[tri_edges].max())
    return Mesh(vertices, triangles, edges, normals, edge_triangles, tri_edges, float(h))


def generate_uniform_mesh(n: int) -> Mesh:
    """``n x n`` squares on the unit square, each cut along its negative-slope diagonal."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    a = (i + (n + 1) * j).ravel()
    b, c, d = a + 1, a + n + 2, a + n + 1
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([a, b, d])
    tris[1::2] = np.column_stack([b, c, d])
    return _from_connectivity(vertices, tris, 1.0 / n)


def mesh_from_arrays(vertices, triangles, h: float | None = None) -> Mesh:
    """Build a mesh from raw arrays; ``h`` defaults to the largest element diameter."""
    return _from_connectivity(vertices, triangles, h)


def load_mesh(path) -> Mesh:
    """Read the plain-text format: ``nv nt``, ``nv`` lines ``x y``, ``nt`` lines ``i j k``."""
    try:
        tokens = Path(path).read_text().split()
        nv, nt = int(tokens[0]), int(tokens[1])
        body = tokens[2:]
        if len(body) != 2 * nv + 3 * nt:
            raise MeshError(f"expected {2 * nv + 3 * nt} values after header, found {len(body)}")
        verts = np.array(body[:2 * nv], dtype=float).reshape(nv, 2)
        tris = np.array([int(t) for t in body[2 * nv:]], dtype=np.int64).reshape(nt, 3)
    except MeshError:
        raise
    except (IndexError, ValueError) as exc:
        raise MeshError(f"cannot parse mesh file {path}: {exc}") from exc
    return _from_connectivity(verts, tris, None)


def save_mesh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ElementGeometry:
    vertices: np.ndarray  # (3, 2)
    jacobian: np.ndarray  # columns p1 - p0, p2 - p0
    det_j: float
    diameter: float
    edge_lengths: np.ndarray  # (3,)
    outward_normals: np.ndarray  # (3, 2)
    signs: np.ndarray  # (3,) n . n_e
    flipped: np.ndarray  # (3,) local direction opposite to global orientation
    global_edges: np.ndarray  # (3,)

    def to_physical(self, ref_points) -> np.ndarray:
        return self.vertices[0] + np.atleast_2d(ref_points) @ self.jacobian.T

    @property
    def area(self) -> float:
        return 0.5 * self.det_j


def element_geometry(mesh: Mesh, t: int) -> ElementGeometry:
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range [0, {mesh.n_triangles})")
    p = mesh.vertices[mesh.triangles[t]]
    jac = np.column_stack([p[1] - p[0], p[2] - p[0]])
    d = p[[1, 2, 0]] - p
    lengths = np.hypot(d[:, 0], d[:, 1])
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    return ElementGeometry(
        vertices=p,
        jacobian=jac,
        det_j=float(np.linalg.det(jac)),
        diameter=float(lengths.max()),
        edge_lengths=lengths,
        outward_normals=normals,
        signs=mesh.edge_signs[t].copy(),
        flipped=mesh.local_edge_flipped[t].copy(),
        global_edges=mesh.tri_edges[t].copy(),
    )
