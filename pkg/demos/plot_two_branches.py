"""
Convex and concave solutions of f = 1, g = 0
============================================

With zero boundary data both ``u`` and ``-u`` solve the equation. The branch
is selected by the sign of the initial guess (and of ``eps`` for the
vanishing moment method, or of the square root for the BFO iteration).
"""

import numpy as np

from ma_spline import NewtonParams, ProblemSpec, SplineSpace, bfo_solve, build_square_mesh, get_test, vm_solve

case = get_test(3)
mesh = build_square_mesh(4)
space = SplineSpace(mesh, 5, 1)

# %%
for branch in ("convex", "concave"):
    spec = ProblemSpec(case.f, case.g, mesh, branch=branch)
    u, rep = vm_solve(spec, space, NewtonParams(epsilon=1e-3))
    print(f"vm  {branch:8s} u(1/2, 1/2) = {u.eval([0.5, 0.5], order=0)[0]:+.4f}  iterations {rep.iterations}")
    u, rep = bfo_solve(spec, space, NewtonParams(bfo_constant=4.0))
    print(f"bfo {branch:8s} u(1/2, 1/2) = {u.eval([0.5, 0.5], order=0)[0]:+.4f}  iterations {rep.iterations}")

# %%
# A grid of samples, symmetric under ``(x, y) -> (y, x)``.
x = np.linspace(0, 1, 5)
X, Y = np.meshgrid(x, x)
vals = u.eval(np.column_stack([X.ravel(), Y.ravel()]), order=0)[0].reshape(5, 5)
print(np.round(vals, 4))
print("asymmetry", np.abs(vals - vals.T).max())
