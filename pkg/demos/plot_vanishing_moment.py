"""
Vanishing moment regularisation
===============================

Solve ``-eps Delta^2 u + det D^2 u = f`` with ``Delta u = eps^2`` on the
boundary for decreasing ``eps`` and compare with the unregularised Newton
solution on ``h = 1/4``, ``d = 5``.
"""

from ma_spline import NewtonParams, ProblemSpec, SplineSpace, build_square_mesh, get_test, newton_solve, vm_solve

case = get_test(1)
mesh = build_square_mesh(4)
space = SplineSpace(mesh, 5, 1)
spec = ProblemSpec(case.f, case.g, mesh, case.exact, f_load=case.f_load)

# %%
for eps in (1e-3, 1e-5, 1e-7, 1e-11):
    _, report = vm_solve(spec, space, NewtonParams(epsilon=eps))
    print(f"eps={eps:7.0e}  L2={report.errors.l2:.4e}  H2={report.errors.h2:.4e}")

# %%
# The limit is the reduced problem.
_, report = newton_solve(spec, space)
print(f"reduced      L2={report.errors.l2:.4e}  H2={report.errors.h2:.4e}")
