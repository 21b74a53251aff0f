"""Projecting matrices onto the doubly stochastic polytope.

The projection is computed by a Barzilai-Borwein gradient method on the
two-vector dual ("dualBB"): cheap iterations, exact nonnegativity by
construction, and a dual certificate that makes feasibility checkable.
"""

import numpy as np

from permlp import project_birkhoff, project_halfspace, project_polytope
from permlp.birkhoff import Cut

rng = np.random.default_rng(0)

print("== plain projection ==")
c = rng.normal(size=(6, 6)) * 2.0
res = project_birkhoff(c, tol=1e-8)
print(f"converged in {res.iters} dual iterations")
print("row sums:", np.round(res.x.sum(axis=1), 10))
print("col sums:", np.round(res.x.sum(axis=0), 10))
print("min entry:", res.x.min(), "(exact zero clamp)")

print("\n== n = 2 has a closed form ==")
# D_2 is the segment between the identity and the anti-diagonal; projecting
# 2*I clamps at the identity endpoint.
res2 = project_birkhoff(np.array([[2.0, 0.0], [0.0, 2.0]]))
print(res2.x)

print("\n== projection restricted by a cutting plane ==")
# Exclude the identity's neighborhood with the overlap cut <I, X> <= n - 3,
# then project the identity itself: the result lands on the cut boundary.
n = 4
cut = Cut(g=np.eye(n), b=n - 3.0, label="LC2")
x = project_polytope(np.eye(n), [cut], tol=1e-8)
print("overlap with identity:", float(np.vdot(np.eye(n), x)), "(<= n-3 =", n - 3, ")")
print(np.round(x, 4))

print("\n== halfspace projection is closed-form ==")
y = project_halfspace(np.ones((2, 2)), Cut(g=np.ones((2, 2)), b=0.0))
print(y)
