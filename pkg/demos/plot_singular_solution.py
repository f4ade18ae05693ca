"""
A solution outside H^2
======================

``u = -sqrt(2 - x^2 - y^2)`` has an unbounded Hessian at the corner
``(1, 1)``. Newton's method deteriorates under refinement while the BFO
iteration stays bounded at coarse resolution.
"""

from ma_spline import ProblemSpec, SplineSpace, bfo_solve, build_square_mesh, get_test, newton_solve

case = get_test(2)

# %%
for m in (4, 8, 16):
    mesh = build_square_mesh(m)
    spec = ProblemSpec(case.f, case.g, mesh, case.exact, f_load=case.f_load)
    space = SplineSpace(mesh, 3, 1)
    _, rn = newton_solve(spec, space)
    line = f"h=1/{m:<3d} Newton L2={rn.errors.l2:9.2e} ({'converged' if rn.converged else rn.failure})"
    if m <= 8:
        _, rb = bfo_solve(spec, space)
        line += f"   BFO L2={rb.errors.l2:.2e} after {rb.iterations} iterations"
    print(line)
