"""Cutting-plane and negative-proximal wrappers around the continuation solver.

Both techniques exclude already-found permutations from later rounds: the
cuts shrink the feasible polytope around each round's best point, while the
negative proximal term pushes iterates away from the running mean of the
best permutation matrices found so far.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .birkhoff import Cut, EmptyIntersectionSuspected
from .core import QapInstance, RoundRecord, SolveResult, perm_to_matrix, relative_gap
from .objective import CurvatureBounds, curvature_bounds, f_grad, f_value_perm
from .solver import SolverConfig, run_lp


@dataclass
class EnhanceConfig:
    """Wrapper knobs; unset fields fall back to instance-dependent rules.

    ``mu0`` defaults to min(0.5, (nu_bar_f - nu_under_f) / 100), ``omega``
    to 1 - 0.5 nu_under_f (which keeps the shifted objective convex), and
    ``c1`` to one unscaled objective unit for integer data, else a relative
    slack.
    """

    k_max: int = 10
    mu0: float | None = None
    c1: float | None = None
    omega: float | None = None

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.mu0 is not None and self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.c1 is not None and self.c1 <= 0:
            raise ValueError("c1 must be positive")


def default_mu0(cb: CurvatureBounds) -> float:
    return min(0.5, (cb.nu_bar_f - cb.nu_under_f) / 100.0)


def default_omega(cb: CurvatureBounds) -> float:
    return 1.0 - 0.5 * cb.nu_under_f


def default_c1(inst: QapInstance, f_tilde_scaled: float) -> float:
    """Smallest strict improvement: one objective unit for integer raw data."""
    a_raw = inst.a * inst.rho_a
    b_raw = inst.b * inst.rho_b
    integral = np.allclose(a_raw, np.round(a_raw), atol=1e-9) and \
        np.allclose(b_raw, np.round(b_raw), atol=1e-9)
    if integral:
        return 1.0 / (inst.rho_a * inst.rho_b)
    return 1e-6 * abs(f_tilde_scaled)


def make_lc1(inst: QapInstance, cb: CurvatureBounds, x_tilde: np.ndarray,
             c1: float, omega: float) -> Cut:
    """Gradient cut of the convexified objective at a known permutation.

    With F_w(X) = f(X) + w ||X||_F^2 convex (w >= -nu_under_f / 2), every
    permutation improving on f(x_tilde) by at least ``c1`` satisfies the
    linearized inequality, while x_tilde itself violates it.
    """
    xt = perm_to_matrix(x_tilde)
    n = inst.n
    f_tilde = f_value_perm(inst, np.asarray(x_tilde, dtype=int))
    g = f_grad(inst, xt) + 2.0 * omega * xt
    f_omega = f_tilde + omega * n  # ||xt||_F^2 = n at a permutation
    b = f_tilde - c1 + omega * n - f_omega + float(np.vdot(g, xt))
    return Cut(g=g, b=b, label="LC1")


def make_lc2(x_tilde: np.ndarray) -> Cut:
    """Overlap cut <x_tilde, X> <= n - 3.

    Excludes exactly x_tilde and its n(n-1)/2 transposition neighbors; valid
    when x_tilde is locally 2-optimal, which the polish step guarantees.
    """
    xt = perm_to_matrix(x_tilde)
    return Cut(g=xt, b=float(xt.shape[0] - 3), label="LC2")


def _finish(inst: QapInstance, best_pi: np.ndarray, best_f_scaled: float,
            nfe: int, outer: int, t0: float, rounds: list[RoundRecord],
            status: str) -> SolveResult:
    f_unscaled = inst.unscale(best_f_scaled)
    gap = relative_gap(f_unscaled, inst.obj_best) if inst.obj_best else None
    return SolveResult(
        x_best=best_pi, f_best=f_unscaled, gap_percent=gap, nfe=nfe,
        outer_iters=outer, wall_time=time.perf_counter() - t0,
        converged=True, status=status, rounds=rounds)


def _enhanced_run(inst: QapInstance, cfg: SolverConfig, ecfg: EnhanceConfig,
                  use_cuts: bool, use_prox: bool) -> SolveResult:
    t0 = time.perf_counter()
    cb = curvature_bounds(inst)
    mu = ecfg.mu0 if ecfg.mu0 is not None else default_mu0(cb)
    omega = ecfg.omega if ecfg.omega is not None else default_omega(cb)

    cuts: list[Cut] = []
    found: list[np.ndarray] = []      # best permutation of each round
    best_pi, best_f = None, np.inf
    nfe = outer = 0
    rounds: list[RoundRecord] = []
    status = "ok"
    for big_k in range(ecfg.k_max):
        prox = None
        if use_prox:
            if found:
                x_hat = np.mean([perm_to_matrix(p) for p in found], axis=0)
            else:
                x_hat = np.zeros((inst.n, inst.n))
            prox = (mu, x_hat)
        try:
            res = run_lp(inst, cfg, cuts=cuts if use_cuts else None, prox=prox)
        except EmptyIntersectionSuspected:
            status = "empty_intersection"
            break
        nfe += res.nfe
        outer += res.outer_iters
        pi_k = res.x_best
        f_k = f_value_perm(inst, pi_k)
        if f_k < best_f:
            best_f, best_pi = f_k, pi_k
        rounds.append(RoundRecord(
            k=big_k, f_best=inst.unscale(f_k),
            gap_percent=relative_gap(inst.unscale(f_k), inst.obj_best) if inst.obj_best else None,
            n_cuts=len(cuts), mu=mu if use_prox else 0.0))
        repeat = use_prox and any(np.array_equal(pi_k, p) for p in found)
        found.append(pi_k)
        if use_cuts:
            f_tilde = f_k
            c1 = ecfg.c1 if ecfg.c1 is not None else default_c1(inst, f_tilde)
            cuts = cuts + [make_lc1(inst, cb, pi_k, c1, omega), make_lc2(pi_k)]
        if use_prox:
            mu /= 2.0
            if repeat:
                status = "repeat_detected"
                break
    return _finish(inst, best_pi, best_f, nfe, outer, t0, rounds, status)


def run_lp_cp(inst: QapInstance, cfg: SolverConfig | None = None,
              ecfg: EnhanceConfig | None = None) -> SolveResult:
    """Cutting-plane rounds: each round's best point is cut out of the polytope."""
    return _enhanced_run(inst, cfg or SolverConfig(), ecfg or EnhanceConfig(),
                         use_cuts=True, use_prox=False)


def run_lp_negprox(inst: QapInstance, cfg: SolverConfig | None = None,
                   ecfg: EnhanceConfig | None = None) -> SolveResult:
    """Negative-proximal rounds pushing away from the mean of found solutions.

    The proximal weight halves each round; the loop stops early when a round
    reproduces an earlier best permutation.
    """
    return _enhanced_run(inst, cfg or SolverConfig(), ecfg or EnhanceConfig(),
                         use_cuts=False, use_prox=True)


def run_lp_cp_negprox(inst: QapInstance, cfg: SolverConfig | None = None,
                      ecfg: EnhanceConfig | None = None) -> SolveResult:
    """Both enhancements at once: accumulated cuts plus the proximal push."""
    return _enhanced_run(inst, cfg or SolverConfig(), ecfg or EnhanceConfig(),
                         use_cuts=True, use_prox=True)
