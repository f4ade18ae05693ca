"""Conforming triangulations of polygonal domains.

A :class:`TriMesh` stores vertex coordinates, counterclockwise triangles and
the full edge list with left/right triangle adjacency. Interior edges are
shared by exactly two triangles; boundary edges have ``right == -1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Invalid or non-conforming triangulation."""


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangulation with edge adjacency.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    edges : (ne, 2) int array of vertex indices, oriented as in ``left``
    edge_left, edge_right : (ne,) int arrays; ``edge_right == -1`` on the boundary
    tri_edges : (nt, 3) edge index opposite to each local vertex
    h : longest edge length
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(repr=False)
    edge_left: np.ndarray = field(repr=False)
    edge_right: np.ndarray = field(repr=False)
    tri_edges: np.ndarray = field(repr=False)
    h: float = 0.0
    label_h: float | None = None

    @classmethod
    def from_arrays(cls, vertices, triangles, label_h: float | None = None) -> "TriMesh":
        """Validate, orient counterclockwise and compute adjacency."""
        V = np.ascontiguousarray(vertices, dtype=float)
        T = np.array(triangles, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 2 or not np.all(np.isfinite(V)):
            raise MeshError("vertices must be a finite (nv, 2) array")
        if T.ndim != 2 or T.shape[1] != 3 or len(T) == 0:
            raise MeshError("triangles must be a nonempty (nt, 3) array")
        if T.min() < 0 or T.max() >= len(V):
            raise MeshError("triangle vertex index out of range")
        if np.any((T[:, 0] == T[:, 1]) | (T[:, 1] == T[:, 2]) | (T[:, 0] == T[:, 2])):
            raise MeshError("triangle with repeated vertex")
        area = signed_areas(V, T)
        scale = np.ptp(V, axis=0).max() ** 2
        if np.any(np.abs(area) <= 1e-14 * scale):
            raise MeshError("zero-area triangle")
        flip = area < 0
        T[flip] = T[flip][:, [0, 2, 1]]

        # local edge m is opposite local vertex m: (v1,v2), (v2,v0), (v0,v1)
        local = np.array([[1, 2], [2, 0], [0, 1]])
        half = T[:, local]  # (nt, 3, 2)
        key = np.sort(half, axis=-1).reshape(-1, 2)
        uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inv = inv.reshape(-1)
        if np.any(counts > 2):
            raise MeshError("non-conforming mesh: edge shared by more than two triangles")
        ne = len(uniq)
        edges = np.empty((ne, 2), dtype=np.int64)
        left = np.full(ne, -1, dtype=np.int64)
        right = np.full(ne, -1, dtype=np.int64)
        flat_half = half.reshape(-1, 2)
        for hidx in range(len(flat_half)):
            e = inv[hidx]
            t = hidx // 3
            if left[e] < 0:
                left[e] = t
                edges[e] = flat_half[hidx]
            else:
                if np.array_equal(flat_half[hidx], edges[e]):
                    raise MeshError("non-conforming mesh: inconsistent orientation or duplicate triangle")
                right[e] = t
        tri_edges = inv.reshape(-1, 3)
        lengths = np.linalg.norm(V[edges[:, 1]] - V[edges[:, 0]], axis=1)
        mesh = cls(V, T, edges, left, right, tri_edges, float(lengths.max()), label_h)
        mesh._check_boundary_loops()
        for a in (V, T, edges, left, right, tri_edges):
            a.flags.writeable = False
        return mesh

    def _check_boundary_loops(self) -> None:
        b = self.edges[self.boundary_edges]
        deg = np.bincount(b.ravel(), minlength=len(self.vertices))
        if np.any((deg != 0) & (deg != 2)):
            raise MeshError("boundary edges do not form closed loops")

    # ------------------------------------------------------------------ #
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_right < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_right >= 0)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary_edges])

    @property
    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    @property
    def mesh_size(self) -> float:
        """Reported size: the construction label when set, else the longest edge."""
        return self.label_h if self.label_h is not None else self.h

    def triangle_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.triangles[t]]

    def outward_normal(self, e: int) -> np.ndarray:
        """Unit outward normal of a boundary edge (left triangle is CCW)."""
        a, b = self.vertices[self.edges[e]]
        tvec = b - a
        return np.array([tvec[1], -tvec[0]]) / np.hypot(*tvec)

    def __repr__(self) -> str:
        return f"TriMesh(nv={self.n_vertices}, nt={self.n_triangles}, ne={self.n_edges}, h={self.h:.4g})"


def build_square_mesh(m: int) -> TriMesh:
    """Unit square split into ``m x m`` squares, each cut by its negative-slope diagonal."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(m):
        for i in range(m):
            v00 = j * (m + 1) + i
            v10, v01, v11 = v00 + 1, v00 + m + 1, v00 + m + 2
            # diagonal from (i+1, j) to (i, j+1)
            tris.append((v00, v10, v01))
            tris.append((v10, v11, v01))
    return TriMesh.from_arrays(verts, tris, label_h=1.0 / m)


def refine_uniform(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four through its edge midpoints."""
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    verts = np.vstack([mesh.vertices, mids])
    T = mesh.triangles
    E = mesh.tri_edges + nv  # midpoint opposite local vertex
    v0, v1, v2 = T[:, 0], T[:, 1], T[:, 2]
    m0, m1, m2 = E[:, 0], E[:, 1], E[:, 2]
    children = np.concatenate(
        [
            np.column_stack([v0, m2, m1]),
            np.column_stack([m2, v1, m0]),
            np.column_stack([m1, m0, v2]),
            np.column_stack([m0, m1, m2]),
        ]
    )
    label = None if mesh.label_h is None else mesh.label_h / 2
    return TriMesh.from_arrays(verts, children, label_h=label)


# --------------------------------------------------------------------------- #
# node / ele text format                                                      #
# --------------------------------------------------------------------------- #


def _data_lines(path: Path):
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line.split()


def _read_table(path: Path, ncols: int, cast):
    lines = list(_data_lines(path))
    if not lines:
        raise MeshError(f"{path}: empty file")
    try:
        count, width = int(lines[0][0]), int(lines[0][1])
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: bad header") from exc
    if width != ncols:
        raise MeshError(f"{path}: expected {ncols} columns per record, header says {width}")
    body = lines[1:]
    if len(body) != count:
        raise MeshError(f"{path}: header announces {count} records, found {len(body)}")
    out = np.empty((count, ncols), dtype=float if cast is float else np.int64)
    seen = np.zeros(count, dtype=bool)
    for rec in body:
        if len(rec) < ncols + 1:
            raise MeshError(f"{path}: short record {rec}")
        try:
            idx = int(rec[0]) - 1
            vals = [cast(v) for v in rec[1 : ncols + 1]]
        except ValueError as exc:
            raise MeshError(f"{path}: cannot parse record {rec}") from exc
        if not 0 <= idx < count or seen[idx]:
            raise MeshError(f"{path}: bad or repeated index {idx + 1}")
        seen[idx] = True
        out[idx] = vals
    return out


def load_mesh(path) -> TriMesh:
    """Read ``<path>.node`` / ``<path>.ele`` (1-based indices).

    ``path`` may name either file or the common stem.
    """
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".node", ".ele") else p
    node, ele = stem.with_suffix(".node"), stem.with_suffix(".ele")
    if not node.exists() or not ele.exists():
        raise FileNotFoundError(f"missing {node} or {ele}")
    verts = _read_table(node, 2, float)
    tris = _read_table(ele, 3, int) - 1
    if len(np.unique(np.sort(tris, axis=1), axis=0)) != len(tris):
        raise MeshError("non-conforming mesh: duplicated triangle")
    return TriMesh.from_arrays(verts, tris)


def save_mesh(mesh: TriMesh, path) -> None:
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".node", ".ele") else p
    with open(stem.with_suffix(".node"), "w") as fh:
        fh.write(f"{mesh.n_vertices} 2\n")
        for i, (x, y) in enumerate(mesh.vertices, 1):
            fh.write(f"{i} {x:.17g} {y:.17g}\n")
    with open(stem.with_suffix(".ele"), "w") as fh:
        fh.write(f"{mesh.n_triangles} 3\n")
        for i, t in enumerate(mesh.triangles, 1):
            fh.write(f"{i} {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def same_mesh(a: TriMesh, b: TriMesh, tol: float = 1e-12) -> bool:
    """True when both meshes have the same vertex set and triangle set, up to renumbering."""
    if a.n_vertices != b.n_vertices or a.n_triangles != b.n_triangles:
        return False

    def canon(mesh):
        order = np.lexsort((mesh.vertices[:, 1].round(10), mesh.vertices[:, 0].round(10)))
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        tris = np.sort(rank[mesh.triangles], axis=1)
        return mesh.vertices[order], tris[np.lexsort(tris.T[::-1])]

    va, ta = canon(a)
    vb, tb = canon(b)
    return bool(np.allclose(va, vb, atol=tol) and np.array_equal(ta, tb))
