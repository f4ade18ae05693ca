import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ma_spline import assembly as asm
from ma_spline.analysis import error_norms, jump_diagnostics, observed_order
from ma_spline.mesh import build_square_mesh
from ma_spline.problems import ExactSolution, f_test1, get_test, one, zero
from ma_spline.solvers import (
    NewtonParams,
    PositivityError,
    ProblemSpec,
    bfo_solve,
    bfo_update,
    initial_guess,
    newton_solve,
    poisson_solve,
    vm_solve,
)
from ma_spline.spline_space import SplineSpace, interpolate
from oracles import NEWTON_H_HALF


def spec_for(test_id, m, branch="convex"):
    case = get_test(test_id, branch)
    return ProblemSpec(case.f, case.g, case.mesh(m), case.exact, branch, case.f_load)


def laplacian(u):
    _, _, H = u.at_quadrature()
    return H[..., 0, 0] + H[..., 1, 1]


# convex cubic with Hessian diag(1 + x, 1) on the unit square
cubic = ExactSolution(
    lambda x, y: x**3 / 6 + (x**2 + y**2) / 2,
    lambda x, y: np.stack([x**2 / 2 + x, y], -1),
    lambda x, y: np.stack([np.stack([1 + x, 0 * x], -1), np.stack([0 * x, 1 + 0 * x], -1)], -2),
)


def cubic_f(x, y):
    return 1 + x


# problem validation --------------------------------------------------------------


def test_spec_and_params_validation(square2):
    with pytest.raises(ValueError):
        ProblemSpec(one, zero, square2, branch="saddle")
    with pytest.raises(ValueError):
        ProblemSpec(one, zero, square2, f_load="nodal")
    with pytest.raises(ValueError):
        NewtonParams(tau=0.5)


# Poisson --------------------------------------------------------------------------


def test_poisson_reproduces_polynomials(square2):
    space = SplineSpace(square2, 3, 1)
    u = poisson_solve(space, 0.0, lambda x, y: x + y)
    assert error_norms(u, ExactSolution(lambda x, y: x + y, lambda x, y: np.stack([1 + 0 * x, 1 + 0 * y], -1), lambda x, y: np.zeros(np.shape(x) + (2, 2)))).h2 < 1e-10
    u = poisson_solve(space, 2.0, lambda x, y: (x**2 + y**2) / 2)
    x, y = space.tables.points[..., 0], space.tables.points[..., 1]
    assert np.abs(u.at_quadrature()[0] - (x**2 + y**2) / 2).max() < 1e-10


# C1 splines of degree < 5 lose an order on the three-direction mesh
@pytest.mark.parametrize("d,r", [(2, 0), (3, 0), (4, 0), (5, 1)])
def test_poisson_manufactured_order(d, r):
    exact = ExactSolution(
        lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
        lambda x, y: np.pi * np.stack([np.cos(np.pi * x) * np.sin(np.pi * y), np.sin(np.pi * x) * np.cos(np.pi * y)], -1),
        lambda x, y: np.zeros(np.shape(x) + (2, 2)),
    )

    def rhs(x, y):
        return -2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)

    data = []
    for m in (4, 8, 16):
        space = SplineSpace(build_square_mesh(m), d, r)
        data.append((1 / m, error_norms(poisson_solve(space, rhs, zero), exact).l2))
    assert observed_order(data) == pytest.approx(d + 1, abs=0.35)


def test_poisson_output_is_smooth(square2):
    space = SplineSpace(square2, 5, 1)
    u = poisson_solve(space, f_test1, get_test(1).g)
    v, g = jump_diagnostics(u)
    assert v <= 1e-9 and g <= 1e-9


# initial guess --------------------------------------------------------------------


def test_initial_guess_f_one(square2):
    space = SplineSpace(square2, 4, 1)
    u0 = initial_guess(ProblemSpec(one, zero, square2), space)
    ref = poisson_solve(space, 2.0, zero)
    assert np.allclose(u0.c, ref.c, atol=1e-12)
    assert np.all(asm.load_vector(space, 2.0) >= 0)


def test_initial_guess_test1(square2):
    space = SplineSpace(square2, 4, 1)
    u0 = initial_guess(ProblemSpec(f_test1, get_test(1).g, square2), space)
    ref = poisson_solve(space, lambda x, y: 2 * np.sqrt(f_test1(x, y)), get_test(1).g)
    assert np.allclose(u0.c, ref.c, atol=1e-12)


def test_initial_guess_concave_is_negated(square2):
    space = SplineSpace(square2, 3, 1)
    a = initial_guess(ProblemSpec(one, zero, square2), space)
    b = initial_guess(ProblemSpec(one, zero, square2, branch="concave"), space)
    assert np.allclose(a.c, -b.c, atol=1e-13)


def test_positivity_error_names_point(square2):
    space = SplineSpace(square2, 3, 1)
    with pytest.raises(PositivityError, match=r"at quadrature point \("):
        initial_guess(ProblemSpec(lambda x, y: x - 0.5, zero, square2), space)


# Newton ---------------------------------------------------------------------------


def test_newton_polynomial_fixed_point(square2):
    space = SplineSpace(square2, 4, 1)
    spec = ProblemSpec(cubic_f, cubic.value, square2, cubic)
    u0 = interpolate(space, cubic.value)
    u, rep = newton_solve(spec, space, u0=u0)
    assert rep.converged and rep.iterations == 1
    assert rep.residual < 1e-10
    assert rep.errors.h2 < 1e-9


def test_newton_test1_coarse_matches_reference():
    spec = spec_for(1, 2)
    u, rep = newton_solve(spec, SplineSpace(spec.mesh, 3, 1))
    assert rep.converged
    for got, ref in zip(rep.errors, NEWTON_H_HALF[3]):
        assert ref / 3 <= got <= 3 * ref
    assert len(rep.residual_history) == rep.iterations == len(rep.increment_history)


def test_newton_residual_decreases_quadratically():
    spec = spec_for(1, 4)
    params = NewtonParams(tol_increment=0.0, max_iters=8)
    _, rep = newton_solve(spec, SplineSpace(spec.mesh, 5, 1), params)
    # the residual levels off at the discretisation floor
    res = np.array(rep.residual_history)
    assert np.all(np.diff(res) <= 1e-8 * res[:-1])
    inc = np.array(rep.increment_history)
    head = inc[inc > 1e-12]
    assert len(head) >= 3
    assert np.all(head[1:] / head[:-1] ** 2 < 50.0)
    assert np.all(np.diff(head[1:] / head[:-1]) < 0)


def test_newton_residual_small_on_test1():
    spec = spec_for(1, 4)
    u, rep = newton_solve(spec, SplineSpace(spec.mesh, 5, 1))
    assert rep.converged and rep.residual < 1e-3


def test_newton_fails_gracefully_for_degree_one(square2):
    with pytest.raises(ValueError):
        newton_solve(ProblemSpec(one, zero, square2), SplineSpace(square2, 1, 0))


# branch symmetry ------------------------------------------------------------------


@pytest.mark.parametrize("driver", ["newton", "bfo", "vm"])
def test_branch_symmetry_for_zero_boundary(driver, square2):
    space = SplineSpace(square2, 4, 1)
    out = []
    for branch in ("convex", "concave"):
        spec = ProblemSpec(one, zero, square2, branch=branch)
        if driver == "newton":
            u, _ = newton_solve(spec, space)
        elif driver == "bfo":
            u, _ = bfo_solve(spec, space, NewtonParams(bfo_constant=4.0, bfo_max_iters=40))
        else:
            u, _ = vm_solve(spec, space, NewtonParams(epsilon=1e-3))
        out.append(u)
    assert np.allclose(out[0].c, -out[1].c, atol=1e-10)
    # convex solution of f=1, g=0 is non-positive inside (maximum principle)
    assert out[0].at_quadrature()[0].max() <= 1e-10
    assert out[1].at_quadrature()[0].min() >= -1e-10


def test_vm_negative_epsilon_selects_concave(square2):
    space = SplineSpace(square2, 4, 1)
    a, _ = vm_solve(ProblemSpec(one, zero, square2, branch="concave"), space, NewtonParams(epsilon=1e-3))
    b, _ = vm_solve(ProblemSpec(one, zero, square2), space, NewtonParams(epsilon=-1e-3))
    assert np.allclose(a.c, b.c, atol=1e-12)


def test_newton_concave_nonzero_boundary_on_square():
    convex = spec_for(1, 2)
    space = SplineSpace(convex.mesh, 4, 1)
    u, _ = newton_solve(convex, space)
    neg = ProblemSpec(f_test1, lambda x, y: -get_test(1).g(x, y), convex.mesh, -get_test(1).exact, "concave", "interpolant")
    v, rep = newton_solve(neg, space)
    assert rep.converged
    assert np.allclose(u.c, -v.c, atol=1e-10)
    assert len(rep.residual_history) == rep.iterations


# BFO ------------------------------------------------------------------------------


def test_bfo_update_examples():
    assert bfo_update(2, 2.0, 1.0, 1.0) == 2.0
    assert bfo_update(2, 0.0, 1.0, 0.0) == pytest.approx(np.sqrt(2))
    assert bfo_update(2, 1.0, 0.0, 10.0) == 0.0
    assert bfo_update(3, 3.0, 5.0, 5.0) == pytest.approx(3.0)
    assert bfo_update(2, 0.0, 1.0, 0.0, branch="concave") == pytest.approx(-np.sqrt(2))
    assert bfo_update(2, 0.0, 1.0, 0.0, constant=4.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        bfo_update(4, 1.0, 1.0, 1.0)


@given(st.floats(-1e3, 1e3), st.floats(0, 1e3), st.floats(-1e3, 1e3))
def test_bfo_update_nonnegative_on_convex_branch(lap, f, det):
    out = bfo_update(2, lap, f, det)
    assert out >= 0 and np.isfinite(out)
    assert bfo_update(2, lap, f, det, branch="concave") == -out


def test_bfo_update_vectorised():
    lap = np.array([2.0, 0.0, 1.0])
    out = bfo_update(2, lap, np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0, 10.0]))
    assert out.shape == (3,)
    assert np.allclose(out, [2.0, np.sqrt(2), 0.0])


def test_bfo_quadratic_fixed_point(square2):
    space = SplineSpace(square2, 3, 1)
    p = lambda x, y: (x**2 + y**2) / 2  # noqa: E731
    u0 = interpolate(space, p)
    u, rep = bfo_solve(ProblemSpec(one, p, square2), space, u0=u0)
    assert rep.converged and rep.iterations == 1
    assert np.allclose(u.c, u0.c, atol=1e-10)


def test_bfo_test1_converges():
    spec = spec_for(1, 2)
    u, rep = bfo_solve(spec, SplineSpace(spec.mesh, 5, 1))
    assert rep.converged
    assert 20 <= rep.iterations <= 80
    assert rep.errors.l2 < 1e-4
    assert laplacian(u).min() > 0
    assert len(rep.residual_history) == rep.iterations


# VM -------------------------------------------------------------------------------


def test_vm_requires_epsilon(square2):
    with pytest.raises(ValueError):
        vm_solve(ProblemSpec(one, zero, square2), SplineSpace(square2, 3, 1), NewtonParams())


def test_vm_tiny_epsilon_matches_newton():
    spec = spec_for(1, 2)
    space = SplineSpace(spec.mesh, 4, 1)
    _, rn = newton_solve(spec, space)
    _, rv = vm_solve(spec, space, NewtonParams(epsilon=1e-12))
    assert rv.converged
    assert rv.errors.l2 == pytest.approx(rn.errors.l2, rel=1e-3)


def test_vm_errors_decrease_with_epsilon():
    spec = spec_for(1, 2)
    space = SplineSpace(spec.mesh, 4, 1)
    errs = [vm_solve(spec, space, NewtonParams(epsilon=e))[1].errors.l2 for e in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
