"""Damped Newton, BFO fixed-point and vanishing-moment drivers for
``det D^2 u = f`` in 2D.

All drivers work on the constrained spline space: each linearized problem is a
block-diagonal stiffness plus load, solved with :mod:`ma_spline.saddle` under
the smoothness and Dirichlet rows of :mod:`ma_spline.spline_space`.

Branches: the concave branch is selected by negating the initial guess (Newton),
the BFO square root, or the regularization parameter (vanishing moment). Every
linear system is multiplied by the branch sign before it is solved, so the
stiffness handed to the saddle solver is positive on the constrained space for
both branches.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import assembly as asm
from .analysis import ErrorTriple, error_norms, h1_norm, ma_residual, vm_residual
from .mesh import TriMesh
from .saddle import ALParams, ConstrainedSolver, SaddleSolveError
from .spline_space import ConstraintSystem, SplineFunction, SplineSpace, interpolate

log = logging.getLogger(__name__)

NDIM = 2
BLOWUP = 1e12


class PositivityError(ValueError):
    """``f`` is not positive where the Poisson initial guess needs ``sqrt(f)``."""


@dataclass
class ProblemSpec:
    """Data of ``det D^2 u = f`` in the domain, ``u = g`` on the boundary.

    ``f_load`` selects how a callable ``f`` enters the loads and residuals:
    ``"quadrature"`` samples it at the quadrature points, ``"interpolant"``
    first replaces it by its per-triangle degree-``d`` interpolant at the
    domain points (this needs ``f`` finite at every mesh vertex).
    """

    f: Callable
    g: Callable
    mesh: TriMesh
    exact: object | None = None
    branch: str = "convex"
    f_load: str = "quadrature"

    def __post_init__(self):
        if self.branch not in ("convex", "concave"):
            raise ValueError(f"branch must be 'convex' or 'concave', got {self.branch!r}")
        if self.f_load not in ("quadrature", "interpolant"):
            raise ValueError(f"f_load must be 'quadrature' or 'interpolant', got {self.f_load!r}")

    @property
    def sign(self) -> float:
        return 1.0 if self.branch == "convex" else -1.0


@dataclass
class NewtonParams:
    """Iteration controls shared by the three drivers.

    ``tol_residual=None`` means ``1e-10 * (1 + ||f||_0)``. Newton and VM also
    stop once the coefficient increment falls below ``tol_increment`` relative
    to the coefficient size; BFO stops on the H1 norm of the increment.
    """

    tau: float = 1.0
    tol_residual: float | None = None
    tol_increment: float = 1e-10
    max_iters: int = 30
    epsilon: float = 0.0
    bfo_constant: float = 2.0
    bfo_tol: float = 1e-8
    bfo_max_iters: int = 300
    al: ALParams = field(default_factory=ALParams)

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")


@dataclass
class SolveReport:
    method: str
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    increment_history: list = field(default_factory=list)
    errors: ErrorTriple | None = None
    residual: float = float("nan")
    converged: bool = False
    wall_time: float = 0.0
    constraint_residual: float = float("nan")
    failure: str | None = None


# --------------------------------------------------------------------------- #
# helpers                                                                     #
# --------------------------------------------------------------------------- #


def _constraints(space: SplineSpace, g) -> ConstraintSystem:
    return space.constraints(g)


def _solve(space, K, L, cs: ConstraintSystem, al: ALParams, sign: float = 1.0) -> SplineFunction:
    solver = ConstrainedSolver(sign * K, cs.R, al)
    c, _, _ = solver.solve(sign * L, cs.G)
    return SplineFunction(space, c)


def f_samples(spec: ProblemSpec, space: SplineSpace) -> np.ndarray:
    """``f`` at the quadrature points, ``(nt, nq)``, following ``spec.f_load``."""
    if spec.f_load == "interpolant" and callable(spec.f):
        fq = interpolate(space, spec.f).at_quadrature()[0]
    else:
        fq = asm.sample(space, spec.f)
    if not np.all(np.isfinite(fq)):
        raise ValueError("f is not finite at the sample points")
    return fq


def _check_positive(space: SplineSpace, f) -> np.ndarray:
    fq = asm.sample(space, f)
    bad = np.argwhere(~(fq > 0))
    if len(bad):
        t, q = bad[0]
        x, y = space.tables.points[t, q]
        raise PositivityError(f"f={fq[t, q]:.3g} <= 0 at quadrature point ({x:.6g}, {y:.6g}) of triangle {t}")
    return fq


def _increment(u_new: SplineFunction, u_old: SplineFunction) -> float:
    return float(np.abs(u_new.c - u_old.c).max() / (1.0 + np.abs(u_new.c).max()))


def _finish(report: SolveReport, u: SplineFunction, spec: ProblemSpec, cs: ConstraintSystem, t0: float, f_res):
    report.wall_time = time.perf_counter() - t0
    report.constraint_residual = cs.residual(u.c)
    with np.errstate(all="ignore"):
        report.residual = f_res(u)
        if spec.exact is not None and np.all(np.isfinite(u.c)):
            report.errors = error_norms(u, spec.exact)
    return u, report


# --------------------------------------------------------------------------- #
# linear building blocks                                                      #
# --------------------------------------------------------------------------- #


def poisson_solve(space: SplineSpace, rhs, g, constraints: ConstraintSystem | None = None, al: ALParams | None = None):
    """Constrained solution of ``Delta u = rhs``, ``u = g`` on the boundary.

    Weak form: ``int Du.Dw = -int rhs w`` for constrained ``w`` vanishing on the
    boundary. ``rhs`` is a callable or an array at the quadrature points.
    """
    cs = constraints if constraints is not None else _constraints(space, g)
    K = asm.weighted_stiffness(space)
    L = -asm.load_vector(space, rhs)
    return _solve(space, K, L, cs, al or ALParams())


def initial_guess(spec: ProblemSpec, space: SplineSpace, constraints=None, al=None) -> SplineFunction:
    """Solve ``Delta u0 = +-2 sqrt(f)`` with ``u0 = g``; sign from the branch."""
    fq = _check_positive(space, f_samples(spec, space))
    return poisson_solve(space, spec.sign * NDIM * np.sqrt(fq), spec.g, constraints, al)


# --------------------------------------------------------------------------- #
# Newton                                                                      #
# --------------------------------------------------------------------------- #


def _default_tol(space, fq, params) -> float:
    if params.tol_residual is not None:
        return params.tol_residual
    return 1e-10 * (1.0 + float(np.sqrt(np.sum(space.tables.weights * fq**2))))


def _has_nonzero_boundary(cs: ConstraintSystem) -> bool:
    from .spline_space import DIRICHLET

    return bool(np.any(cs.G[cs.tags == DIRICHLET] != 0.0))


def newton_solve(spec: ProblemSpec, space: SplineSpace, params: NewtonParams | None = None, u0: SplineFunction | None = None):
    """Damped Newton iteration in divergence form.

    Each step solves, for constrained ``w`` vanishing on the boundary,

        int (cof D^2 u_k) D u_{k+1} . Dw
            = (1 - 1/(n tau)) int (cof D^2 u_k) D u_k . Dw - (1/tau) int f w

    with ``u_{k+1} = g``. On the concave branch with nonzero ``g`` the convex
    problem with ``-g`` is solved first and its negation is the initial guess.
    """
    params = params or NewtonParams()
    if space.d < 2:
        raise ValueError("Newton's method needs d >= 2")
    t0 = time.perf_counter()
    cs = _constraints(space, spec.g)
    sign = spec.sign
    fq = f_samples(spec, space)
    report = SolveReport("newton")
    if u0 is None:
        if sign < 0 and _has_nonzero_boundary(cs):
            mirrored = replace(spec, g=lambda x, y: -spec.g(x, y), branch="convex", exact=None)
            w, inner = newton_solve(mirrored, space, params)
            report.residual_history.extend(inner.residual_history)
            report.increment_history.extend(inner.increment_history)
            u0 = -w
        else:
            u0 = initial_guess(spec, space, cs, params.al)
    start = len(report.residual_history)
    tol = _default_tol(space, fq, params)
    Lf = asm.load_vector(space, fq)
    a = 1.0 - 1.0 / (NDIM * params.tau)
    u = u0
    for k in range(1, params.max_iters + 1):
        Kk = asm.weighted_stiffness(space, asm.cofactor_field(u))
        L = a * (Kk @ u.c) - Lf / params.tau
        try:
            u_new = _solve(space, Kk, L, cs, params.al, sign)
        except SaddleSolveError as exc:
            report.failure = f"linear solve failed at iteration {k}: {exc}"
            log.warning(report.failure)
            break
        inc = _increment(u_new, u)
        u = u_new
        with np.errstate(over="ignore", invalid="ignore"):
            res = ma_residual(u, fq)
        report.iterations = start + k
        report.residual_history.append(res)
        report.increment_history.append(inc)
        if not np.isfinite(res) or np.abs(u.c).max() > BLOWUP:
            report.failure = f"iterates diverged at iteration {k}"
            break
        if res <= tol or inc <= params.tol_increment:
            report.converged = True
            break
    return _finish(report, u, spec, cs, t0, lambda v: ma_residual(v, fq))


# --------------------------------------------------------------------------- #
# BFO                                                                         #
# --------------------------------------------------------------------------- #


def bfo_update(n: int, lap, f, det, constant: float | None = None, branch: str = "convex"):
    """New Laplacian of the BFO fixed point.

    2D: ``sqrt(max(0, lap^2 + c (f - det)))`` with ``c = 2`` by default.
    3D: ``cbrt(lap^3 + 9 (f - det))``. The concave branch negates the result.
    """
    lap, f, det = (np.asarray(v, dtype=float) for v in (lap, f, det))
    if n == 2:
        c = 2.0 if constant is None else constant
        out = np.sqrt(np.maximum(0.0, lap**2 + c * (f - det)))
    elif n == 3:
        c = 9.0 if constant is None else constant
        out = np.cbrt(lap**3 + c * (f - det))
    else:
        raise ValueError("n must be 2 or 3")
    if branch == "concave":
        out = -out
    return out[()] if out.ndim == 0 else out


def bfo_solve(spec: ProblemSpec, space: SplineSpace, params: NewtonParams | None = None, u0: SplineFunction | None = None):
    """Sequence of Poisson problems ``Delta u_{k+1} = +-sqrt((Delta u_k)^2 + 2(f - det D^2 u_k))``.

    Starts from zero when ``g = 0`` and from the harmonic extension of ``g``
    otherwise. The Poisson block matrix is factored once.
    """
    params = params or NewtonParams()
    if space.d < 2:
        raise ValueError("BFO needs d >= 2")
    t0 = time.perf_counter()
    cs = _constraints(space, spec.g)
    K = asm.weighted_stiffness(space)
    solver = ConstrainedSolver(K, cs.R, params.al)

    def poisson(rhs_q):
        c, _, _ = solver.solve(-asm.load_vector(space, rhs_q), cs.G)
        return SplineFunction(space, c)

    if u0 is None:
        u0 = poisson(0.0) if _has_nonzero_boundary(cs) else space.zeros()
    fq = f_samples(spec, space)
    report = SolveReport("bfo")
    u = u0
    for k in range(1, params.bfo_max_iters + 1):
        _, _, H = u.at_quadrature()
        lap = H[..., 0, 0] + H[..., 1, 1]
        rhs = bfo_update(2, lap, fq, asm.det2(H), params.bfo_constant, spec.branch)
        u_new = poisson(rhs)
        inc = h1_norm(u_new - u)
        u = u_new
        report.iterations = k
        report.increment_history.append(inc)
        report.residual_history.append(inc)
        if not np.isfinite(inc) or np.abs(u.c).max() > BLOWUP:
            report.failure = f"iterates diverged at iteration {k}"
            break
        if inc <= params.bfo_tol:
            report.converged = True
            break
    return _finish(report, u, spec, cs, t0, lambda v: ma_residual(v, fq))


# --------------------------------------------------------------------------- #
# vanishing moment                                                            #
# --------------------------------------------------------------------------- #


def vm_solve(spec: ProblemSpec, space: SplineSpace, params: NewtonParams, u0: SplineFunction | None = None):
    """Newton iteration for ``-eps Delta^2 u + det D^2 u = f``.

    Each step solves, for constrained ``v`` vanishing on the boundary,

        eps int Delta u_{k+1} Delta v + int (cof D^2 u_k) D u_{k+1} . Dv
            = ((n-1)/n) int (cof D^2 u_k) D u_k . Dv
              + |eps|^3 int_boundary dv/dn - int f v

    The boundary term carries the datum ``Delta u = sign(eps) eps^2``, which
    for ``eps > 0`` is ``Delta u = eps^2``. The concave branch uses
    ``eps < 0`` (either a negative ``params.epsilon`` or ``branch='concave'``)
    and the negated initial guess. The initial guess solves
    ``-|eps| Delta^2 u + Delta u = +-2 sqrt(f)`` with the same boundary terms.
    """
    if params.epsilon == 0.0:
        raise ValueError("vanishing moment needs epsilon != 0")
    if space.d < 2:
        raise ValueError("vanishing moment needs d >= 2")
    if params.epsilon < 0 and spec.branch == "convex":
        spec = replace(spec, branch="concave")
    sign = spec.sign
    eps = abs(params.epsilon)
    t0 = time.perf_counter()
    cs = _constraints(space, spec.g)
    B = asm.biharmonic_matrix(space)
    flux = eps**3 * asm.boundary_flux_vector(space)
    fq = f_samples(spec, space)
    Lf = asm.load_vector(space, fq)

    if u0 is None:
        _check_positive(space, fq)
        A0 = eps * B + asm.weighted_stiffness(space)
        rhs0 = flux - asm.load_vector(space, NDIM * np.sqrt(fq))
        # concave: negation of the convex problem with -g
        u0 = _solve(space, A0, sign * rhs0, cs, params.al)

    report = SolveReport("vm")
    tol = _default_tol(space, fq, params)
    a = (NDIM - 1) / NDIM
    eps_signed = sign * eps
    u = u0
    for k in range(1, params.max_iters + 1):
        Kk = asm.weighted_stiffness(space, asm.cofactor_field(u))
        A = eps_signed * B + Kk
        L = a * (Kk @ u.c) + flux - Lf
        try:
            u_new = _solve(space, A, L, cs, params.al, sign)
        except SaddleSolveError as exc:
            report.failure = f"linear solve failed at iteration {k}: {exc}"
            log.warning(report.failure)
            break
        inc = _increment(u_new, u)
        u = u_new
        with np.errstate(over="ignore", invalid="ignore"):
            res = vm_residual(u, fq, eps_signed)
        report.iterations = k
        report.residual_history.append(res)
        report.increment_history.append(inc)
        if not np.isfinite(res) or np.abs(u.c).max() > BLOWUP:
            report.failure = f"iterates diverged at iteration {k}"
            break
        if res <= tol or inc <= params.tol_increment:
            report.converged = True
            break
    return _finish(report, u, spec, cs, t0, lambda v: vm_residual(v, fq, eps_signed))
