"""Closed-form data for the benchmark problems det D^2 u = f, u = g.

Test 1: smooth radial solution ``exp((x^2+y^2)/2)`` on the unit square.
Test 2: ``-sqrt(2 - x^2 - y^2)``, gradient singular at the corner (1, 1).
Test 3: ``f = 1``, ``g = 0``; no closed form, convex and concave branches.
Test 4: ``+-exp((x^2+y^2)/2)`` on a triangulated unit disc.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from .mesh import TriMesh, build_square_mesh, load_mesh, refine_uniform


@dataclass(frozen=True)
class ExactSolution:
    """Value, gradient ``(..., 2)`` and Hessian ``(..., 2, 2)`` callables of ``(x, y)``."""

    value: Callable
    gradient: Callable
    hessian: Callable

    def __call__(self, x, y):
        return self.value(x, y)

    def __neg__(self) -> "ExactSolution":
        return ExactSolution(
            lambda x, y: -self.value(x, y),
            lambda x, y: -self.gradient(x, y),
            lambda x, y: -self.hessian(x, y),
        )


def _stack_hessian(a11, a12, a22):
    return np.stack([np.stack([a11, a12], -1), np.stack([a12, a22], -1)], -2)


def _exp_radial():
    def u(x, y):
        return np.exp((np.asarray(x) ** 2 + np.asarray(y) ** 2) / 2)

    def du(x, y):
        e = u(x, y)
        return np.stack([x * e, y * e], -1)

    def d2u(x, y):
        e = u(x, y)
        return _stack_hessian((1 + x**2) * e, x * y * e, (1 + y**2) * e)

    return ExactSolution(u, du, d2u)


def _sphere():
    def s(x, y):
        return np.sqrt(2.0 - np.asarray(x) ** 2 - np.asarray(y) ** 2)

    def u(x, y):
        return -s(x, y)

    def du(x, y):
        r = s(x, y)
        return np.stack([x / r, y / r], -1)

    def d2u(x, y):
        r3 = s(x, y) ** 3
        return _stack_hessian((2 - y**2) / r3, x * y / r3, (2 - x**2) / r3)

    return ExactSolution(u, du, d2u)


def f_test1(x, y):
    r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
    return (1 + r2) * np.exp(r2)


def f_test2(x, y):
    return 2.0 / (2.0 - np.asarray(x) ** 2 - np.asarray(y) ** 2) ** 2


def one(x, y):
    return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def zero(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


@dataclass(frozen=True)
class TestCase:
    """One benchmark problem. ``mesh_file`` is None for the unit square.

    ``f_load`` is the recommended :class:`ma_spline.solvers.ProblemSpec` load
    mode: the interpolant of ``f`` where it is smooth, plain quadrature
    sampling for Test 2 whose ``f`` blows up at the corner vertex ``(1, 1)``.
    """

    id: int
    name: str
    f: Callable
    g: Callable
    exact: ExactSolution | None
    mesh_file: str | None = None
    f_load: str = "interpolant"

    __test__ = False  # not a pytest class

    def mesh(self, m: int | None = None, path=None) -> TriMesh:
        if path is not None:
            return load_mesh(path)
        if self.mesh_file is not None:
            mesh = load_mesh(circle_mesh_path())
            for _ in range(m or 0):
                mesh = refine_uniform(mesh)
            return mesh
        return build_square_mesh(m or 2)


def circle_mesh_path():
    """Stem of the bundled 824-triangle Delaunay mesh of the unit disc."""
    return resources.files("ma_spline") / "data" / "circle824"


def get_test(test_id: int, branch: str = "convex") -> TestCase:
    """Registry lookup. ``branch`` only matters for Test 4, whose concave
    variant uses ``-exp((x^2+y^2)/2)``."""
    if test_id == 1:
        ex = _exp_radial()
        return TestCase(1, "smooth radial", f_test1, ex.value, ex)
    if test_id == 2:
        ex = _sphere()
        return TestCase(2, "not in H2", f_test2, ex.value, ex, f_load="quadrature")
    if test_id == 3:
        return TestCase(3, "f=1, g=0", one, zero, None)
    if test_id == 4:
        ex = _exp_radial()
        if branch == "concave":
            ex = -ex
        return TestCase(4, "unit disc", f_test1, ex.value, ex, mesh_file="circle824")
    raise ValueError(f"unknown test id {test_id}; expected 1..4")
