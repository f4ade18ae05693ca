"""Discontinuous Bernstein-Bezier coefficient layout and linear constraints.

A piecewise polynomial of degree ``d`` on a mesh is a vector ``c`` of length
``N = nt * nb``; the coefficients of triangle ``t`` occupy
``c[t*nb:(t+1)*nb]``. Continuity, smoothness and boundary conditions are
linear rows ``R c = G``; no basis of the constrained space is ever built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
import scipy.sparse as sp

from . import bernstein as bb
from .mesh import TriMesh

SMOOTHNESS = 0
DIRICHLET = 1


@dataclass(frozen=True)
class ConstraintSystem:
    """Sparse constraint rows with right-hand side and per-row tags."""

    R: sp.csr_matrix
    G: np.ndarray
    tags: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.R.shape[0]

    def __add__(self, other: "ConstraintSystem") -> "ConstraintSystem":
        return ConstraintSystem(
            sp.vstack([self.R, other.R]).tocsr(),
            np.concatenate([self.G, other.G]),
            np.concatenate([self.tags, other.tags]),
        )

    def residual(self, c) -> float:
        return float(np.linalg.norm(self.R @ c - self.G))


def _empty_system(N: int) -> ConstraintSystem:
    return ConstraintSystem(sp.csr_matrix((0, N)), np.zeros(0), np.zeros(0, dtype=np.int64))


class SplineSpace:
    """Degree-``d`` piecewise polynomials on ``mesh`` with target smoothness ``r``."""

    def __init__(self, mesh: TriMesh, d: int, r: int = 1):
        if d < 1:
            raise ValueError("degree must be >= 1")
        if not 0 <= r < d:
            raise ValueError(f"smoothness r={r} must satisfy 0 <= r < d={d}")
        self.mesh = mesh
        self.d = d
        self.r = r
        self.nb = bb.ncoeffs(d)
        self.N = mesh.n_triangles * self.nb

    def __repr__(self) -> str:
        return f"SplineSpace(d={self.d}, r={self.r}, N={self.N}, {self.mesh!r})"

    def offset(self, t: int) -> int:
        return t * self.nb

    @cached_property
    def bary_jacobians(self) -> np.ndarray:
        """(nt, 3, 2) constant ``db/dx`` per triangle."""
        return np.stack([bb.bary_gradients(self.mesh.triangle_vertices(t)) for t in range(self.mesh.n_triangles)])

    @cached_property
    def quadrature(self) -> bb.QuadratureRule:
        return bb.quadrature(bb.assembly_degree(self.d))

    @cached_property
    def tables(self) -> "QuadTables":
        return QuadTables.build(self, self.quadrature)

    def constraints(self, g=None) -> ConstraintSystem:
        """Smoothness rows followed by Dirichlet rows for ``g`` (omitted if None)."""
        cs = smoothness_constraints(self)
        if g is not None:
            cs = cs + dirichlet_constraints(self, g)
        return cs

    def zeros(self) -> "SplineFunction":
        return SplineFunction(self, np.zeros(self.N))


@dataclass(eq=False)
class QuadTables:
    """Basis values and Cartesian derivatives at every quadrature point.

    Shapes: ``points (nt, nq, 2)``, ``weights (nt, nq)``, ``B (nq, nb)``,
    ``grad (nt, nq, nb, 2)``, ``hess (nt, nq, nb, 2, 2)``.
    """

    points: np.ndarray
    weights: np.ndarray
    B: np.ndarray
    grad: np.ndarray
    hess: np.ndarray | None

    @classmethod
    def build(cls, space: SplineSpace, rule: bb.QuadratureRule) -> "QuadTables":
        mesh, d = space.mesh, space.d
        P = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
        points = np.einsum("qm,tmi->tqi", rule.points, P)
        weights = 2.0 * mesh.areas[:, None] * rule.weights[None, :]
        G = space.bary_jacobians
        B = bb.bernstein_basis(d, rule.points)
        dB = bb.bary_derivative_basis(d, rule.points, 1)
        grad = np.einsum("qam,tmi->tqai", dB, G)
        hess = None
        if d >= 2:
            ddB = bb.bary_derivative_basis(d, rule.points, 2)
            hess = np.einsum("qamn,tmi,tnj->tqaij", ddB, G, G)
        return cls(points, weights, B, grad, hess)


@dataclass(eq=False)
class SplineFunction:
    """Coefficient vector over a :class:`SplineSpace`."""

    space: SplineSpace
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (self.space.N,):
            raise ValueError(f"coefficient length {self.c.shape} does not match N={self.space.N}")

    @property
    def local(self) -> np.ndarray:
        return self.c.reshape(self.space.mesh.n_triangles, self.space.nb)

    def __neg__(self) -> "SplineFunction":
        return SplineFunction(self.space, -self.c)

    def __sub__(self, other: "SplineFunction") -> "SplineFunction":
        return SplineFunction(self.space, self.c - other.c)

    def __add__(self, other: "SplineFunction") -> "SplineFunction":
        return SplineFunction(self.space, self.c + other.c)

    def at_quadrature(self, tables: QuadTables | None = None):
        """Values, gradients and Hessians at the quadrature points of every triangle."""
        T = tables or self.space.tables
        cl = self.local
        val = np.einsum("qa,ta->tq", T.B, cl)
        grad = np.einsum("tqai,ta->tqi", T.grad, cl)
        hess = None if T.hess is None else np.einsum("tqaij,ta->tqij", T.hess, cl)
        return val, grad, hess

    def locate(self, points, tol: float = 1e-12):
        """Containing triangle (lowest index on ties) and barycentric coordinates."""
        return locate_points(self.space.mesh, points, tol)

    def eval(self, p, order: int = 2):
        """``(value, gradient, hessian)`` at a point or an (n, 2) array of points."""
        pts = np.atleast_2d(np.asarray(p, dtype=float))
        tri, bary = self.locate(pts)
        if np.any(tri < 0):
            raise ValueError("point outside the domain")
        d = self.space.d
        G = self.space.bary_jacobians[tri]
        cl = self.local[tri]
        val = np.einsum("na,na->n", bb.bernstein_basis(d, bary), cl)
        out = [val]
        for k in range(1, order + 1):
            D = bb.bary_derivative_basis(d, bary, k)  # (n, nb, 3..)
            D = np.einsum("na...,na->n...", D, cl)
            letters = "pqrs"[:k]
            cart = "ijkl"[:k]
            expr = "n" + letters + "," + ",".join(f"n{m}{c}" for m, c in zip(letters, cart)) + "->n" + cart
            out.append(np.einsum(expr, D, *([G] * k)))
        if np.ndim(p) == 1:
            out = [o[0] for o in out]
        return tuple(out)

    def eval_on(self, t: int, bary, order: int = 2):
        """Evaluate the polynomial piece of triangle ``t`` (possibly outside it)."""
        return bb.eval_bezier(self.space.d, self.local[t], bary, self.space.mesh.triangle_vertices(t), order)


def locate_points(mesh: TriMesh, points, tol: float = 1e-12, chunk: int = 2048):
    """Containing triangle index (-1 outside) and barycentric coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) > chunk:
        parts = [_locate(mesh, pts[i : i + chunk], tol) for i in range(0, len(pts), chunk)]
        return np.concatenate([p[0] for p in parts]), np.vstack([p[1] for p in parts])
    return _locate(mesh, pts, tol)


def _locate(mesh: TriMesh, pts: np.ndarray, tol: float):
    P = mesh.vertices[mesh.triangles]
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    rel = pts[:, None, :] - P[None, :, 0, :]
    b2 = (e2[None, :, 1] * rel[..., 0] - e2[None, :, 0] * rel[..., 1]) / det
    b3 = (-e1[None, :, 1] * rel[..., 0] + e1[None, :, 0] * rel[..., 1]) / det
    b1 = 1.0 - b2 - b3
    inside = (b1 >= -tol) & (b2 >= -tol) & (b3 >= -tol)
    has = inside.any(axis=1)
    tri = np.where(has, inside.argmax(axis=1), -1)
    idx = np.arange(len(pts))
    t = np.maximum(tri, 0)
    bary = np.column_stack([b1[idx, t], b2[idx, t], b3[idx, t]])
    return tri, bary


# --------------------------------------------------------------------------- #
# constraints                                                                 #
# --------------------------------------------------------------------------- #


def _local_position(tri: np.ndarray, vertex: int) -> int:
    return int(np.flatnonzero(tri == vertex)[0])


def smoothness_constraints(space: SplineSpace) -> ConstraintSystem:
    """C^0..C^r conditions across every interior edge.

    For triangle ``T`` (left) and its neighbour ``T'`` (right) with far vertex
    ``w`` of ``T'``, and ``beta`` the barycentric coordinates of ``w`` with
    respect to ``T``, the C^s rows read

        c'[w:s, a:i, b:j] = sum_{|nu|=s} c[o:nu_o, a:i+nu_a, b:j+nu_b] B^s_nu(beta)

    for every ``i + j = d - s``; ``s = 0`` simply equates the edge coefficients.
    """
    mesh, d, r, nb = space.mesh, space.d, space.r, space.nb
    imap = bb.index_map(d)
    rows, cols, vals = [], [], []
    nrow = 0
    for e in mesh.interior_edges:
        tL, tR = int(mesh.edge_left[e]), int(mesh.edge_right[e])
        va, vb = (int(v) for v in mesh.edges[e])
        TL, TR = mesh.triangles[tL], mesh.triangles[tR]
        aL, bL = _local_position(TL, va), _local_position(TL, vb)
        aR, bR = _local_position(TR, va), _local_position(TR, vb)
        wR = 3 - aR - bR
        w = mesh.vertices[TR[wR]]
        beta = bb.barycentric(mesh.vertices[TL], w)
        for s in range(r + 1):
            nus = bb.multi_indices(s)
            weights = bb.bernstein_basis(s, beta)
            for i in range(d - s, -1, -1):
                j = d - s - i
                mR = [0, 0, 0]
                mR[wR], mR[aR], mR[bR] = s, i, j
                rows.append(nrow)
                cols.append(space.offset(tR) + imap[tuple(mR)])
                vals.append(1.0)
                for nu, wgt in zip(nus, weights):
                    if wgt == 0.0:
                        continue
                    # nu and beta are in the local vertex order of T
                    mL = [int(v) for v in nu]
                    mL[aL] += i
                    mL[bL] += j
                    rows.append(nrow)
                    cols.append(space.offset(tL) + imap[tuple(mL)])
                    vals.append(-wgt)
                nrow += 1
    if nrow == 0:
        return _empty_system(space.N)
    R = sp.csr_matrix((vals, (rows, cols)), shape=(nrow, space.N))
    R.sum_duplicates()
    return ConstraintSystem(R, np.zeros(nrow), np.full(nrow, SMOOTHNESS))


def boundary_chains(mesh: TriMesh, tol: float = 1e-10) -> list:
    """Group boundary edges into maximal straight chains.

    Each chain is a list of edge indices ordered head to tail along the
    counterclockwise boundary orientation.
    """
    bedges = mesh.boundary_edges
    nxt = {int(mesh.edges[e, 0]): int(e) for e in bedges}
    direction = {}
    for e in bedges:
        a, b = mesh.vertices[mesh.edges[e]]
        direction[int(e)] = (b - a) / np.hypot(*(b - a))

    def straight(e1, e2):
        t1, t2 = direction[e1], direction[e2]
        return abs(t1[0] * t2[1] - t1[1] * t2[0]) < tol and t1 @ t2 > 0

    prev = {nxt[int(mesh.edges[e, 0])]: None for e in bedges}
    for e in bedges:
        prev[nxt[int(mesh.edges[e, 1])]] = int(e)
    heads = [int(e) for e in bedges if not straight(prev[int(e)], int(e))]
    chains = []
    for h in heads:
        chain = [h]
        e = nxt[int(mesh.edges[h, 1])]
        while e != h and straight(chain[-1], e):
            chain.append(e)
            e = nxt[int(mesh.edges[e, 1])]
        chains.append(chain)
    if not chains:  # a loop made of a single straight chain cannot close
        raise ValueError("degenerate boundary")
    return chains


def chain_trace(d: int, r: int, g, points: np.ndarray) -> np.ndarray:
    """Univariate C^r spline trace of ``g`` along a straight polyline.

    ``points`` are the chain vertices (k+1, 2). Returns Bernstein coefficients
    (k, d+1) of the least-squares fit to ``g`` at ``d + 1`` equally spaced points
    per edge, subject to C^r joins and exact values at both chain ends. A single edge, or ``r = 0``, gives plain
    interpolation; polynomials of degree <= d along the line are reproduced.
    """
    k = len(points) - 1
    lengths = np.linalg.norm(np.diff(points, axis=0), axis=1)
    t = np.linspace(0.0, 1.0, d + 1)
    Ainv = bb.univariate_interpolation_inverse(d)
    A = np.linalg.inv(Ainv)
    y = np.concatenate(
        [np.asarray(g(*(((1 - t)[:, None] * points[i] + t[:, None] * points[i + 1]).T)), float) * np.ones(d + 1) for i in range(k)]
    )
    if k == 1 or r == 0:
        return (Ainv @ y.reshape(k, d + 1).T).T
    n = k * (d + 1)
    rows = []
    for i in range(k - 1):
        for rho in range(r + 1):
            row = np.zeros(n)
            # rho-th forward difference at the end of edge i and start of edge i+1
            for j in range(rho + 1):
                sgn = (-1) ** (rho - j)
                binom = factorial(rho) / (factorial(j) * factorial(rho - j))
                row[i * (d + 1) + d - rho + j] += sgn * binom / lengths[i] ** rho
                row[(i + 1) * (d + 1) + j] -= sgn * binom / lengths[i + 1] ** rho
            rows.append(row)
    # chain ends interpolate g so that neighbouring chains agree at corners
    ends = np.zeros((2, n))
    ends[0, 0] = ends[1, n - 1] = 1.0
    C = np.vstack([np.array(rows), ends])
    cval = np.concatenate([np.zeros(len(rows)), [y[0], y[-1]]])
    Abig = np.kron(np.eye(k), A)
    kkt = np.block([[Abig.T @ Abig, C.T], [C, np.zeros((len(C), len(C)))]])
    rhs = np.concatenate([Abig.T @ y, cval])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:n].reshape(k, d + 1)


def edge_interpolant(d: int, g, pa, pb) -> np.ndarray:
    """Univariate Bernstein coefficients (from ``pa`` to ``pb``) interpolating
    ``g`` at ``d + 1`` equally spaced edge points."""
    return chain_trace(d, 0, g, np.array([pa, pb], dtype=float))[0]


def dirichlet_constraints(space: SplineSpace, g) -> ConstraintSystem:
    """One row per edge domain point of every boundary edge; corners are
    duplicated (one row from each adjacent edge).

    The prescribed values are the Bernstein coefficients of the boundary
    trace of ``g``: per-edge interpolation, made C^r across vertices where
    boundary edges are collinear (see :func:`chain_trace`), so that the rows
    are consistent with the smoothness conditions.
    """
    mesh, d = space.mesh, space.d
    imap = bb.index_map(d)
    cols, G = [], []
    for chain in boundary_chains(mesh):
        pts = np.vstack([mesh.vertices[mesh.edges[chain, 0]], mesh.vertices[mesh.edges[chain[-1], 1]]])
        coefs = chain_trace(d, space.r, g, pts)
        for e, coef in zip(chain, coefs):
            t = int(mesh.edge_left[e])
            va, vb = (int(v) for v in mesh.edges[e])
            tri = mesh.triangles[t]
            a, b = _local_position(tri, va), _local_position(tri, vb)
            for m in range(d + 1):
                mi = [0, 0, 0]
                mi[a], mi[b] = d - m, m
                cols.append(space.offset(t) + imap[tuple(mi)])
                G.append(coef[m])
    n = len(cols)
    R = sp.csr_matrix((np.ones(n), (np.arange(n), cols)), shape=(n, space.N))
    return ConstraintSystem(R, np.asarray(G, dtype=float), np.full(n, DIRICHLET))


def interpolate(space: SplineSpace, u) -> SplineFunction:
    """Per-triangle interpolation at the domain points (generally discontinuous).

    ``u`` is called as ``u(x, y)`` with arrays.
    """
    d = space.d
    P = space.mesh.vertices[space.mesh.triangles]
    pts = np.einsum("pm,tmi->tpi", bb.domain_points(d), P)
    vals = np.asarray(u(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])
    coeffs = vals @ bb.interpolation_inverse(d).T
    return SplineFunction(space, coeffs.ravel())


def monomial_coefficients(space: SplineSpace, poly) -> SplineFunction:
    """Exact Bezier net of a polynomial of degree <= d (alias of interpolate)."""
    return interpolate(space, poly)
