"""Spline element solvers for the two-dimensional Monge-Ampere equation.

``det D^2 u = f`` in a polygon, ``u = g`` on its boundary, discretized by
piecewise Bernstein-Bezier polynomials whose smoothness and boundary values
are linear constraints handled by an augmented-Lagrangian saddle solver.
"""

from .analysis import ErrorTriple, error_norms, jump_diagnostics, ma_residual, observed_order
from .mesh import MeshError, TriMesh, build_square_mesh, load_mesh, refine_uniform, save_mesh
from .problems import ExactSolution, TestCase, get_test
from .saddle import ALParams, ConstrainedSolver, SaddleSolveError, solve_constrained
from .solvers import (
    NewtonParams,
    PositivityError,
    ProblemSpec,
    SolveReport,
    bfo_solve,
    bfo_update,
    initial_guess,
    newton_solve,
    poisson_solve,
    vm_solve,
)
from .spline_space import ConstraintSystem, SplineFunction, SplineSpace, interpolate

__all__ = [
    "ALParams",
    "ConstrainedSolver",
    "ConstraintSystem",
    "ErrorTriple",
    "ExactSolution",
    "MeshError",
    "NewtonParams",
    "PositivityError",
    "ProblemSpec",
    "SaddleSolveError",
    "SolveReport",
    "SplineFunction",
    "SplineSpace",
    "TestCase",
    "TriMesh",
    "bfo_solve",
    "bfo_update",
    "build_square_mesh",
    "error_norms",
    "get_test",
    "initial_guess",
    "interpolate",
    "jump_diagnostics",
    "load_mesh",
    "ma_residual",
    "newton_solve",
    "observed_order",
    "poisson_solve",
    "refine_uniform",
    "save_mesh",
    "solve_constrained",
    "vm_solve",
]
