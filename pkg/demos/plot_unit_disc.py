"""
A non-square domain
===================

The unit disc is covered by a bundled 824-triangle Delaunay mesh. The
concave solution with nonzero boundary data is computed by solving the
convex problem for ``-g`` first.
"""

from ma_spline import ProblemSpec, SplineSpace, get_test, newton_solve
from ma_spline.analysis import jump_diagnostics

for branch in ("convex", "concave"):
    case = get_test(4, branch)
    mesh = case.mesh()
    spec = ProblemSpec(case.f, case.g, mesh, case.exact, branch, case.f_load)
    u, rep = newton_solve(spec, SplineSpace(mesh, 3, 1))
    e = rep.errors
    print(f"{branch:8s} {mesh.n_triangles} triangles  L2={e.l2:.2e} H1={e.h1:.2e} H2={e.h2:.2e}  jumps={max(jump_diagnostics(u)):.1e}")
