"""Matrix bandwidth minimization by bisection over assignment relaxations.

A banded matrix is scrambled by a random relabeling; reverse Cuthill-McKee
gives the starting upper bound, and each bisection step asks the assignment
solver whether a smaller bandwidth is achievable. Certificates are actual
orderings, so every reported bound is verifiable by a recount.
"""

import numpy as np

from permlp import PatternMatrix, bandwidth_of, rcm_order, run_bi_lp
from permlp.solver import SolverConfig

n, k = 40, 5
gen = np.random.default_rng(12)
idx = np.arange(n)
dist = np.abs(idx[:, None] - idx[None, :])
adj = (dist <= k) & (dist > 0)
mask = gen.uniform(size=(n, n)) < 0.92
mask = mask & mask.T
adj = adj & (mask | (dist == 1) | (dist == k))
perm = gen.permutation(n)
pattern = PatternMatrix(n=n, adj=adj[np.ix_(perm, perm)])

print(f"planted half-bandwidth: {k}   scrambled bandwidth: {bandwidth_of(pattern)}")

pi_rcm = rcm_order(pattern)
print(f"reverse Cuthill-McKee bound: {bandwidth_of(pattern, pi_rcm)}")

bw, pi, steps = run_bi_lp(pattern, SolverConfig(seed=1, local_search_every=5))
print(f"bisection result: {bw}   (recount: {bandwidth_of(pattern, pi)})")
print("steps:")
for s in steps:
    how = "solved" if s.solved else "settled by certificate"
    print(f"  m={s.m:3d}  h={s.h_estimate:9.1f}  "
          f"{'feasible' if s.certified else 'infeasible'} ({how})")
