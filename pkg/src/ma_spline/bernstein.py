"""Bernstein-Bezier polynomials on a single triangle.

Coefficients of a degree-``d`` polynomial are stored in lexicographic order of
the multi-index ``(i, j, k)``, ``i + j + k = d``, with ``i`` descending and then
``j`` descending::

    d = 2:  (2,0,0) (1,1,0) (1,0,1) (0,2,0) (0,1,1) (0,0,2)

Every routine accepts batches of barycentric points as arrays whose last axis
has length 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def multi_indices(d: int) -> np.ndarray:
    """All ``(i, j, k)`` with ``i + j + k = d`` in the package ordering."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    idx = [(i, j, d - i - j) for i in range(d, -1, -1) for j in range(d - i, -1, -1)]
    out = np.array(idx, dtype=np.int64).reshape(-1, 3)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def index_map(d: int) -> dict:
    """Map ``(i, j, k) -> position`` for degree ``d``."""
    return {tuple(int(v) for v in m): n for n, m in enumerate(multi_indices(d))}


def ncoeffs(d: int) -> int:
    return (d + 1) * (d + 2) // 2


@lru_cache(maxsize=None)
def _multinomials(d: int) -> np.ndarray:
    mi = multi_indices(d)
    return np.array([factorial(d) / (factorial(i) * factorial(j) * factorial(k)) for i, j, k in mi])


def bernstein_basis(d: int, bary) -> np.ndarray:
    """Evaluate all degree-``d`` Bernstein polynomials.

    Parameters
    ----------
    d : int
        Polynomial degree.
    bary : array_like, shape (..., 3)
        Barycentric coordinates.

    Returns
    -------
    ndarray, shape (..., (d+1)(d+2)/2)
    """
    b = np.asarray(bary, dtype=float)
    mi = multi_indices(d)
    # b[..., None, m] ** mi[:, m] multiplied over m
    powers = np.prod(b[..., None, :] ** mi, axis=-1)
    return _multinomials(d) * powers


def barycentric(vertices, points) -> np.ndarray:
    """Barycentric coordinates of ``points`` with respect to a triangle.

    ``vertices`` is a (3, 2) array. Raises ``ValueError`` for a degenerate
    triangle.
    """
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(points, dtype=float)
    T = np.column_stack([v[1] - v[0], v[2] - v[0]])
    det = T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0]
    scale = max(np.abs(T).max(), 1.0) ** 2
    if abs(det) <= 1e-14 * scale:
        raise ValueError("degenerate triangle")
    rel = p - v[0]
    b2 = (T[1, 1] * rel[..., 0] - T[0, 1] * rel[..., 1]) / det
    b3 = (-T[1, 0] * rel[..., 0] + T[0, 0] * rel[..., 1]) / det
    b1 = 1.0 - b2 - b3
    return np.stack([b1, b2, b3], axis=-1)


def bary_gradients(vertices) -> np.ndarray:
    """Constant Jacobian ``db_m/dx_i`` of the barycentric map, shape (3, 2)."""
    v = np.asarray(vertices, dtype=float)
    T = np.column_stack([v[1] - v[0], v[2] - v[0]])
    Tinv = np.linalg.inv(T)
    G = np.empty((3, 2))
    G[1:] = Tinv
    G[0] = -Tinv.sum(axis=0)
    return G


@lru_cache(maxsize=None)
def _shift_table(d: int, k: int) -> np.ndarray:
    """For each derivative direction tuple and lower-degree index, the position
    of ``alpha + e_m1 + ... + e_mk`` in the degree-``d`` ordering.

    Shape ``(3,)*k + (ncoeffs(d-k),)``.
    """
    lo = multi_indices(d - k)
    imap = index_map(d)
    table = np.empty((3,) * k + (len(lo),), dtype=np.int64)
    for dirs in np.ndindex(*((3,) * k)):
        shift = np.zeros(3, dtype=np.int64)
        for m in dirs:
            shift[m] += 1
        for n, a in enumerate(lo):
            table[dirs + (n,)] = imap[tuple(int(x) for x in a + shift)]
    return table


def bary_derivative_basis(d: int, bary, k: int) -> np.ndarray:
    """k-th order barycentric partial derivatives of every basis polynomial.

    Returns shape ``(..., nb, 3, ..., 3)`` (``k`` trailing axes) holding
    ``d^k B_alpha / db_m1 ... db_mk``. Uses
    ``dB^d_alpha/db_m = d * B^{d-1}_{alpha - e_m}``.
    """
    b = np.asarray(bary, dtype=float)
    nb = ncoeffs(d)
    out = np.zeros(b.shape[:-1] + (nb,) + (3,) * k)
    if k > d:
        return out
    low = bernstein_basis(d - k, b)
    scale = factorial(d) / factorial(d - k)
    table = _shift_table(d, k)
    for dirs in np.ndindex(*((3,) * k)):
        sel = (Ellipsis, table[dirs + (slice(None),)]) + dirs
        # basis alpha receives B^{d-k}_{alpha - shift}
        out[sel] += scale * low
    return out


def _to_cartesian(tensor: np.ndarray, G: np.ndarray, k: int) -> np.ndarray:
    letters = "mnop"[:k]
    cart = "ijkl"[:k]
    expr = "..." + letters + "," + ",".join(f"{m}{c}" for m, c in zip(letters, cart)) + "->..." + cart
    return np.einsum(expr, tensor, *([G] * k))


def eval_bezier(d: int, coeffs, bary, vertices, order: int = 2):
    """Value and Cartesian derivatives of a Bezier polynomial on a triangle.

    Parameters
    ----------
    d : int
        Degree.
    coeffs : array_like, shape (nb,)
        Bezier net in the package ordering.
    bary : array_like, shape (..., 3)
        Evaluation points in barycentric coordinates.
    vertices : array_like, shape (3, 2)
        Triangle geometry.
    order : int
        Highest derivative order returned (0..3).

    Returns
    -------
    tuple
        ``(value, gradient, hessian[, third])`` truncated to ``order``;
        gradient has trailing shape (2,), Hessian (2, 2).
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != ncoeffs(d):
        raise ValueError(f"expected {ncoeffs(d)} coefficients for degree {d}, got {c.shape[-1]}")
    G = bary_gradients(vertices)
    b = np.asarray(bary, dtype=float)
    out = [bernstein_basis(d, b) @ c]
    for k in range(1, order + 1):
        # contract the net over basis index, then map barycentric -> Cartesian
        t = np.moveaxis(bary_derivative_basis(d, b, k), b.ndim - 1, -1) @ c
        out.append(_to_cartesian(t, G, k))
    return tuple(out)


def de_casteljau(d: int, coeffs, bary) -> np.ndarray:
    """Evaluate by repeated barycentric averaging of the net (single point)."""
    b = np.asarray(bary, dtype=float)
    net = {tuple(int(v) for v in m): float(x) for m, x in zip(multi_indices(d), np.asarray(coeffs, float))}
    for level in range(d, 0, -1):
        net = {
            tuple(int(v) for v in a): sum(
                b[m] * net[(a[0] + (m == 0), a[1] + (m == 1), a[2] + (m == 2))] for m in range(3)
            )
            for a in multi_indices(level - 1)
        }
    return net[(0, 0, 0)]


@lru_cache(maxsize=None)
def domain_points(d: int) -> np.ndarray:
    """Barycentric coordinates ``alpha / d`` of the domain points."""
    if d == 0:
        return np.array([[1 / 3, 1 / 3, 1 / 3]])
    return multi_indices(d) / d


@lru_cache(maxsize=None)
def interpolation_inverse(d: int) -> np.ndarray:
    """Inverse of the collocation matrix at domain points (same on every triangle)."""
    A = bernstein_basis(d, domain_points(d))
    return np.linalg.inv(A)


@lru_cache(maxsize=None)
def univariate_interpolation_inverse(d: int) -> np.ndarray:
    """Inverse of the (d+1)x(d+1) univariate Bernstein collocation matrix at
    equally spaced parameters ``t_l = l/d``; row ``m`` corresponds to the
    coefficient of ``C(d,m) (1-t)^(d-m) t^m``."""
    t = np.linspace(0.0, 1.0, d + 1)
    m = np.arange(d + 1)
    binom = np.array([factorial(d) / (factorial(i) * factorial(d - i)) for i in m])
    A = binom * (1 - t[:, None]) ** (d - m) * t[:, None] ** m
    return np.linalg.inv(A)


# --------------------------------------------------------------------------- #
# Quadrature                                                                  #
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference triangle (0,0), (1,0), (0,1).

    ``points`` are barycentric (n, 3); ``weights`` sum to the reference area 1/2.
    ``degree`` is the total polynomial degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def on_triangle(self, vertices):
        """Cartesian points and weights mapped to a physical triangle."""
        v = np.asarray(vertices, dtype=float)
        area = 0.5 * abs((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))
        return self.points @ v, self.weights * 2.0 * area


def _orbit(a: float, b: float, c: float) -> list:
    pts = {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}
    return sorted(pts, reverse=True)


def _symmetric_rule(degree: int) -> QuadratureRule | None:
    if degree <= 1:
        pts, w = [(1 / 3, 1 / 3, 1 / 3)], [1.0]
    elif degree == 2:
        pts = _orbit(2 / 3, 1 / 6, 1 / 6)
        w = [1 / 3] * 3
    elif degree <= 5:
        # seven-point degree-5 rule (Radon); weights for unit area
        s = np.sqrt(15.0)
        a1, a2 = (6 - s) / 21, (6 + s) / 21
        o1 = _orbit(1 - 2 * a1, a1, a1)
        o2 = _orbit(1 - 2 * a2, a2, a2)
        pts = [(1 / 3, 1 / 3, 1 / 3)] + o1 + o2
        w = [9 / 40] + [(155 - s) / 1200] * 3 + [(155 + s) / 1200] * 3
        degree = 5
    else:
        return None
    degree = max(degree, 1)
    return QuadratureRule(np.array(pts, dtype=float), 0.5 * np.array(w), degree)


def _collapsed_gauss(degree: int) -> QuadratureRule:
    # x = u, y = (1 - u) t; Gauss-Jacobi in u absorbs the (1-u) Jacobian
    n = (degree + 2) // 2
    s, ws = roots_jacobi(n, 1.0, 0.0)
    u = (1 + s) / 2
    wu = ws / 4
    t, wt = roots_legendre(n)
    t = (1 + t) / 2
    wt = wt / 2
    U, Tt = np.meshgrid(u, t, indexing="ij")
    x = U.ravel()
    y = ((1 - U) * Tt).ravel()
    w = np.outer(wu, wt).ravel()
    pts = np.column_stack([1 - x - y, x, y])
    return QuadratureRule(pts, w, 2 * n - 1)


@lru_cache(maxsize=None)
def quadrature(q: int) -> QuadratureRule:
    """Rule on the reference triangle exact for total degree ``q``.

    Symmetric tabulated rules cover ``q <= 5``; higher degrees use a collapsed
    (Duffy) Gauss-Jacobi x Gauss-Legendre product rule.
    """
    if q < 1:
        raise ValueError("quadrature degree must be >= 1")
    rule = _symmetric_rule(q)
    return rule if rule is not None else _collapsed_gauss(q)


def assembly_degree(d: int) -> int:
    """Exactness used for all spline integrals of degree-``d`` elements."""
    return max(3 * d - 4, 2 * d)


def monomial_integral(a: int, b: int, c: int, area: float = 0.5) -> float:
    """Exact integral of ``b1^a b2^b b3^c`` over a triangle of given area."""
    return factorial(a) * factorial(b) * factorial(c) * 2.0 * area / factorial(a + b + c + 2)


def gauss_legendre_01(n: int):
    """n-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(n)
    return (1 + x) / 2, w / 2
