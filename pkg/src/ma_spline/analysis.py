"""Error norms, Monge-Ampere residuals, convergence orders and jump checks."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import bernstein as bb
from .assembly import det2, sample
from .spline_space import SplineFunction


class ErrorTriple(NamedTuple):
    """Full L2, H1 and H2 norms of ``u_h - u``."""

    l2: float
    h1: float
    h2: float


def error_norms(u_h: SplineFunction, exact) -> ErrorTriple:
    """Quadrature of the value, gradient and Hessian errors with the assembly rule.

    ``exact`` needs ``value``, ``gradient`` and ``hessian`` callables (see
    :class:`ma_spline.problems.ExactSolution`). For ``d < 2`` the Hessian term
    of ``u_h`` is taken as zero.
    """
    space = u_h.space
    T = space.tables
    x, y = T.points[..., 0], T.points[..., 1]
    val, grad, hess = u_h.at_quadrature()
    if hess is None:
        hess = np.zeros(grad.shape + (2,))
    e0 = val - exact.value(x, y)
    e1 = grad - exact.gradient(x, y)
    e2 = hess - exact.hessian(x, y)
    w = T.weights
    s0 = float(np.sum(w * e0**2))
    s1 = float(np.sum(w * np.sum(e1**2, axis=-1)))
    s2 = float(np.sum(w * np.sum(e2**2, axis=(-2, -1))))
    return ErrorTriple(float(np.sqrt(s0)), float(np.sqrt(s0 + s1)), float(np.sqrt(s0 + s1 + s2)))


def ma_residual(u_h: SplineFunction, f) -> float:
    """``|| det D^2 u_h - f ||_{L2}``."""
    if u_h.space.d < 2:
        raise ValueError("residual needs d >= 2")
    _, _, H = u_h.at_quadrature()
    r = det2(H) - sample(u_h.space, f)
    return float(np.sqrt(np.sum(u_h.space.tables.weights * r**2)))


def bilaplacian_at_quadrature(u_h: SplineFunction) -> np.ndarray:
    """Element-wise ``Delta^2 u_h`` at the quadrature points, ``(nt, nq)``."""
    space = u_h.space
    d = space.d
    if d < 4:
        return np.zeros(space.tables.weights.shape)
    rule = space.quadrature
    D4 = bb.bary_derivative_basis(d, rule.points, 4)  # (nq, nb, 3, 3, 3, 3)
    net = np.einsum("qamnop,ta->tqmnop", D4, u_h.local)
    G = space.bary_jacobians
    t4 = np.einsum("tqmnop,tmi,tnj,tok,tpl->tqijkl", net, G, G, G, G)
    return t4[..., 0, 0, 0, 0] + 2 * t4[..., 0, 0, 1, 1] + t4[..., 1, 1, 1, 1]


def vm_residual(u_h: SplineFunction, f, epsilon: float) -> float:
    """``|| -eps Delta^2 u_h + det D^2 u_h - f ||_{L2}`` (element-wise)."""
    _, _, H = u_h.at_quadrature()
    r = det2(H) - sample(u_h.space, f)
    if epsilon != 0.0:
        r = r - epsilon * bilaplacian_at_quadrature(u_h)
    return float(np.sqrt(np.sum(u_h.space.tables.weights * r**2)))


def observed_order(errors) -> float:
    """Least-squares slope of ``log(value)`` against ``log(h)``."""
    data = np.asarray(list(errors), dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need at least two (h, value) pairs")
    h, e = data[:, 0], data[:, 1]
    if np.any(e <= 0) or np.any(h <= 0):
        raise ValueError("observed_order needs positive h and error values")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def jump_diagnostics(u_h: SplineFunction, n_samples: int = 20):
    """Largest jumps of ``u_h`` and ``D u_h`` over all interior edges.

    Samples ``n_samples`` equally spaced points strictly inside each edge.
    """
    space = u_h.space
    mesh, d = space.mesh, space.d
    edges = mesh.interior_edges
    if len(edges) == 0:
        return 0.0, 0.0
    t = (np.arange(n_samples) + 0.5) / n_samples
    a = mesh.vertices[mesh.edges[edges, 0]]
    b = mesh.vertices[mesh.edges[edges, 1]]
    pts = a[:, None, :] * (1 - t)[None, :, None] + b[:, None, :] * t[None, :, None]
    sides = []
    for tri in (mesh.edge_left[edges], mesh.edge_right[edges]):
        G = space.bary_jacobians[tri]
        v0 = mesh.vertices[mesh.triangles[tri, 0]]
        bary = np.einsum("eij,epj->epi", G, pts - v0[:, None, :])
        bary[..., 0] += 1.0
        coef = u_h.local[tri]
        val = np.einsum("epa,ea->ep", bb.bernstein_basis(d, bary), coef)
        db = np.einsum("epam,ea->epm", bb.bary_derivative_basis(d, bary, 1), coef)
        grad = np.einsum("epm,emi->epi", db, G)
        sides.append((val, grad))
    (v1, g1), (v2, g2) = sides
    return float(np.abs(v1 - v2).max()), float(np.linalg.norm(g1 - g2, axis=-1).max())


def l2_norm(u_h: SplineFunction) -> float:
    val, _, _ = u_h.at_quadrature()
    return float(np.sqrt(np.sum(u_h.space.tables.weights * val**2)))


def h1_norm(u_h: SplineFunction) -> float:
    val, grad, _ = u_h.at_quadrature()
    w = u_h.space.tables.weights
    return float(np.sqrt(np.sum(w * (val**2 + np.sum(grad**2, axis=-1)))))
