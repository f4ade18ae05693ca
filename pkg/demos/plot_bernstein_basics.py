"""
Bernstein-Bezier pieces and triangle quadrature
===============================================

A degree-``d`` polynomial on a triangle is stored by its Bezier net of
``(d+1)(d+2)/2`` coefficients. This demo evaluates a piece, checks the
de Casteljau value against the Bernstein sum and integrates monomials.
"""

import numpy as np

from ma_spline import bernstein as bb

# %%
# A random cubic piece on a physical triangle.
rng = np.random.default_rng(0)
d = 3
tri = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]])
coeffs = rng.normal(size=bb.ncoeffs(d))
bary = rng.dirichlet(np.ones(3), size=5)

value, grad, hess = bb.eval_bezier(d, coeffs, bary, tri, order=2)
print("values      ", np.round(value, 6))
print("de Casteljau", np.round([bb.de_casteljau(d, coeffs, b) for b in bary], 6))

# %%
# The rule used to assemble degree-``d`` elements is exact to degree
# ``max(3d - 4, 2d)``; compare with the closed form of monomial integrals.
for d in (3, 5, 8):
    q = bb.assembly_degree(d)
    rule = bb.quadrature(q)
    a, b, c = q // 3, q // 3, q - 2 * (q // 3)
    got = np.sum(rule.weights * np.prod(rule.points ** np.array([a, b, c]), axis=1))
    print(f"d={d}: degree {q} rule with {len(rule.weights)} points, error {abs(got - bb.monomial_integral(a, b, c)):.1e}")
