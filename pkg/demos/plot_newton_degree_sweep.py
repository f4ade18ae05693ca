"""
Newton's method for a smooth solution
=====================================

``det D^2 u = (1 + x^2 + y^2) exp(x^2 + y^2)`` on the unit square with the
exact solution ``exp((x^2 + y^2)/2)``. The mesh has ``h = 1/2`` and the
degree runs from 3 to 8 with ``C^1`` smoothness.
"""

from ma_spline import ProblemSpec, SplineSpace, build_square_mesh, get_test, newton_solve

case = get_test(1)
mesh = build_square_mesh(2)
spec = ProblemSpec(case.f, case.g, mesh, case.exact, f_load=case.f_load)

# %%
# Errors fall by roughly an order of magnitude per degree.
print(" d  n_it        L2        H1        H2")
for d in range(3, 9):
    u, report = newton_solve(spec, SplineSpace(mesh, d, 1))
    e = report.errors
    print(f"{d:2d} {report.iterations:5d} {e.l2:9.2e} {e.h1:9.2e} {e.h2:9.2e}")
