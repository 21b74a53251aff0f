"""Lp-regularized optimization over permutation matrices.

Heuristic solvers for the quadratic assignment problem and matrix bandwidth
minimization: a projected-gradient continuation method over the doubly
stochastic polytope with greedy rounding and 2-exchange polish, plus
cutting-plane and negative-proximal enhancement rounds.
"""

from .bandwidth import PatternMatrix, bandwidth_of, h_of_m, rcm_order, run_bi_lp, toeplitz_penalty
from .birkhoff import Cut, DualPoint, ProjectionResult, project_birkhoff, project_halfspace, project_polytope
from .core import (
    QapInstance,
    SolveResult,
    matrix_to_perm,
    perm_to_matrix,
    relative_gap,
    scale_instance,
)
from .enhancements import EnhanceConfig, make_lc1, make_lc2, run_lp_cp, run_lp_cp_negprox, run_lp_negprox
from .localsearch import greedy_round, local_2opt, swap_delta
from .objective import (
    CurvatureBounds,
    RegParams,
    F_value_grad,
    curvature_bounds,
    f_grad,
    f_value,
    nonzero_lower_bound,
    reg_h_value,
    sigma_thresholds,
)
from .solver import SolverConfig, run_lp

__all__ = [
    "PatternMatrix", "bandwidth_of", "h_of_m", "rcm_order", "run_bi_lp", "toeplitz_penalty",
    "Cut", "DualPoint", "ProjectionResult", "project_birkhoff", "project_halfspace",
    "project_polytope",
    "QapInstance", "SolveResult", "matrix_to_perm", "perm_to_matrix", "relative_gap",
    "scale_instance",
    "EnhanceConfig", "make_lc1", "make_lc2", "run_lp_cp", "run_lp_cp_negprox", "run_lp_negprox",
    "greedy_round", "local_2opt", "swap_delta",
    "CurvatureBounds", "RegParams", "F_value_grad", "curvature_bounds", "f_grad", "f_value",
    "nonzero_lower_bound", "reg_h_value", "sigma_thresholds",
    "SolverConfig", "run_lp",
]
