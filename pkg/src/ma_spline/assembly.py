"""Matrices and vectors of the weak forms on the discontinuous layout.

Every element matrix lives in its own diagonal block, so global matrices are
block diagonal with ``nb x nb`` dense blocks. Scalar and matrix fields are
passed either as callables ``s(x, y)`` or as arrays sampled at the quadrature
points of :attr:`SplineSpace.tables` (shape ``(nt, nq)`` or ``(nt, nq, 2, 2)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import bernstein as bb
from .spline_space import SplineFunction, SplineSpace

NDIM = 2


# --------------------------------------------------------------------------- #
# pointwise 2x2 algebra (arrays with trailing (2, 2))                          #
# --------------------------------------------------------------------------- #


def cof2(H):
    """Cofactor matrix ``[[h22, -h12], [-h12, h11]]`` of symmetric 2x2 matrices."""
    H = np.asarray(H, dtype=float)
    C = np.empty_like(H)
    C[..., 0, 0] = H[..., 1, 1]
    C[..., 1, 1] = H[..., 0, 0]
    C[..., 0, 1] = -H[..., 0, 1]
    C[..., 1, 0] = -H[..., 1, 0]
    return C


def det2(H):
    H = np.asarray(H, dtype=float)
    return H[..., 0, 0] * H[..., 1, 1] - H[..., 0, 1] * H[..., 1, 0]


def sym2(a11: float, a12: float, a22: float) -> np.ndarray:
    return np.array([[a11, a12], [a12, a22]], dtype=float)


# --------------------------------------------------------------------------- #


@dataclass
class AssembledSystem:
    K: sp.csr_matrix
    L: np.ndarray


def _block_diag(blocks: np.ndarray) -> sp.csr_matrix:
    nt, nb, _ = blocks.shape
    data = blocks.reshape(-1)
    base = (np.arange(nt) * nb)[:, None, None]
    rows = np.broadcast_to(base + np.arange(nb)[None, :, None], blocks.shape).reshape(-1)
    cols = np.broadcast_to(base + np.arange(nb)[None, None, :], blocks.shape).reshape(-1)
    return sp.csr_matrix((data, (rows, cols)), shape=(nt * nb, nt * nb))


def sample(space: SplineSpace, s) -> np.ndarray:
    """Scalar field at the quadrature points, ``(nt, nq)``."""
    T = space.tables
    if callable(s):
        v = s(T.points[..., 0], T.points[..., 1])
        return np.broadcast_to(np.asarray(v, dtype=float), T.weights.shape).copy()
    arr = np.asarray(s, dtype=float)
    return np.broadcast_to(arr, T.weights.shape).copy()


def mass_matrix(space: SplineSpace) -> sp.csr_matrix:
    T = space.tables
    blocks = np.einsum("tq,qa,qb->tab", T.weights, T.B, T.B)
    return _block_diag(blocks)


def weighted_stiffness(space: SplineSpace, A=None) -> sp.csr_matrix:
    """``K_ab = int A D(phi_a) . D(phi_b)``; ``A=None`` means the identity."""
    T = space.tables
    if A is None:
        blocks = np.einsum("tq,tqai,tqbi->tab", T.weights, T.grad, T.grad)
    else:
        A = np.broadcast_to(np.asarray(A, dtype=float), T.weights.shape + (2, 2))
        blocks = np.einsum("tq,tqai,tqij,tqbj->tab", T.weights, T.grad, A, T.grad)
    return _block_diag(blocks)


def _require_hessians(space: SplineSpace):
    if space.d < 2:
        raise ValueError("second derivatives require degree d >= 2")
    return space.tables


def laplacian_table(space: SplineSpace) -> np.ndarray:
    """Laplacian of every basis function at quadrature points, ``(nt, nq, nb)``."""
    T = _require_hessians(space)
    return T.hess[..., 0, 0] + T.hess[..., 1, 1]


def biharmonic_matrix(space: SplineSpace) -> sp.csr_matrix:
    T = _require_hessians(space)
    lap = laplacian_table(space)
    blocks = np.einsum("tq,tqa,tqb->tab", T.weights, lap, lap)
    return _block_diag(blocks)


def load_vector(space: SplineSpace, s) -> np.ndarray:
    T = space.tables
    vals = sample(space, s)
    return np.einsum("tq,tq,qa->ta", T.weights, vals, T.B).ravel()


def det_hessian_load(space: SplineSpace, u: SplineFunction) -> np.ndarray:
    _require_hessians(space)
    _, _, H = u.at_quadrature()
    return load_vector(space, det2(H))


def cofactor_field(u: SplineFunction) -> np.ndarray:
    """``cof D^2 u`` at the quadrature points, ``(nt, nq, 2, 2)``."""
    _require_hessians(u.space)
    _, _, H = u.at_quadrature()
    return cof2(H)


def boundary_flux_vector(space: SplineSpace) -> np.ndarray:
    """``F_a = integral over the boundary of d(phi_a)/dn``, outward normal."""
    mesh, d = space.mesh, space.d
    tg, wg = bb.gauss_legendre_01(max(1, (d + 2) // 2))
    F = np.zeros(space.N)
    for e in mesh.boundary_edges:
        t = int(mesh.edge_left[e])
        verts = mesh.triangle_vertices(t)
        pa, pb = mesh.vertices[mesh.edges[e]]
        length = float(np.hypot(*(pb - pa)))
        n = mesh.outward_normal(e)
        pts = (1 - tg)[:, None] * pa + tg[:, None] * pb
        bary = bb.barycentric(verts, pts)
        G = space.bary_jacobians[t]
        grad = np.einsum("qam,mi->qai", bb.bary_derivative_basis(d, bary, 1), G)
        F[space.offset(t) : space.offset(t) + space.nb] += length * np.einsum("q,qai,i->a", wg, grad, n)
    return F


def energy_functional(u: SplineFunction, f) -> float:
    """``J(u) = int (cof D^2 u) Du.Du + 2n int f u`` with ``n = 2``."""
    space = u.space
    T = _require_hessians(space)
    val, grad, H = u.at_quadrature()
    C = cof2(H)
    quad = np.einsum("tqi,tqij,tqj->tq", grad, C, grad)
    fv = sample(space, f)
    return float(np.sum(T.weights * (quad + 2 * NDIM * fv * val)))
