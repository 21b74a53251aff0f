"""Escaping stalls with cutting planes and the negative proximal push.

On chr12c the plain continuation reliably stalls a hair above the optimum.
Excluding found solutions (cuts) or pushing away from their running mean
(negative proximal term) lets later rounds land on the global optimum.
"""

from pathlib import Path

from permlp import run_lp, run_lp_cp, run_lp_cp_negprox, run_lp_negprox, scale_instance
from permlp.enhancements import EnhanceConfig
from permlp.io import lookup_best, parse_qaplib
from permlp.solver import SolverConfig

DATA = Path(__file__).parent.parent / "tests" / "data" / "qaplib"

a, b = parse_qaplib((DATA / "chr12c.dat").read_text())
inst = scale_instance(a, b, name="chr12c", obj_best=lookup_best("chr12c"))

cfg = SolverConfig(seed=7)
ecfg = EnhanceConfig(k_max=10)

for label, runner in [
    ("plain continuation", lambda: run_lp(inst, cfg)),
    ("cutting planes", lambda: run_lp_cp(inst, cfg, ecfg)),
    ("negative proximal", lambda: run_lp_negprox(inst, cfg, ecfg)),
    ("cuts + proximal", lambda: run_lp_cp_negprox(inst, cfg, ecfg)),
]:
    res = runner()
    rounds = f", {len(res.rounds)} rounds" if res.rounds else ""
    print(f"{label:<20s} obj {res.f_best:8.0f}  gap {res.gap_percent:7.4f} %"
          f"  ({res.wall_time:.1f} s{rounds})")

print("\nper-round trace of the combined variant:")
res = run_lp_cp_negprox(inst, cfg, ecfg)
for r in res.rounds:
    print(f"  round {r.k}: obj {r.f_best:8.0f}  gap {r.gap_percent:7.4f} %"
          f"  cuts {r.n_cuts:2d}  mu {r.mu:.4f}")
