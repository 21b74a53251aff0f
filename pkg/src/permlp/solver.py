"""Projected-gradient continuation solver over the doubly stochastic polytope.

One run solves a sequence of regularized subproblems

    min_X  f(X) + sigma_k ||X + eps_k 1||_p^p   over the polytope

with sigma_k swept from convexifying (negative) to strongly concave values
and eps_k shrunk whenever a subproblem fails to improve the incumbent. Each
subproblem runs a nonmonotone projected gradient method with alternating
Barzilai-Borwein steps; iterates are greedily rounded and 2-opt polished on
the fly, and the best permutation seen anywhere is returned.

A run owns its mutable state; runs on different instances can proceed
concurrently.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .birkhoff import Cut, project_birkhoff, project_polytope
from .core import OuterRecord, QapInstance, SolveResult, perm_to_matrix, relative_gap
from .localsearch import round_and_polish
from .objective import F_grad, F_value, F_value_grad, RegParams, curvature_bounds, reg_h_value

_LINESEARCH_MAX_BACKTRACKS = 60
_PERTURB_BETA = 0.1


@dataclass
class SolverConfig:
    """Solver defaults; every field is exposed as a CLI flag."""

    p: float = 0.75
    eps0: float = 0.1
    eps_min: float = 1e-3
    gamma: float = 0.9            # eps shrink factor
    sigma_minus: float = -0.01    # upper end of the negative sigma phase
    sigma_max: float = 1e6
    tol: float = 1e-3             # outer guard on ||X||_p^p / n - 1
    alpha0: float = 1e-3          # initial projected-gradient step
    theta: float = 1e-4           # line search sufficient-decrease factor
    delta: float = 0.5            # backtracking ratio
    eta: float = 0.85             # nonmonotone reference decay
    tau0_x: float = 1e-3
    tau0_f: float = 1e-6
    tau_min_x: float = 1e-5
    tau_min_f: float = 1e-8
    max_outer: int = 500
    max_inner: int = 1000
    local_search_every: int = 1
    seed: int = 0
    l2_mode: bool = False         # quadratic-regularizer continuation baseline
    proj_tol: float = 1e-8

    def __post_init__(self):
        for name in ("eps0", "eps_min", "tau0_x", "tau0_f", "tau_min_x", "tau_min_f",
                     "alpha0", "sigma_max", "proj_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("gamma", "delta", "theta", "eta", "tol"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0,1)")
        if self.sigma_minus >= 0:
            raise ValueError("sigma_minus must be negative")


@dataclass
class NonmonotoneState:
    """Decaying weighted average of past objective values (reference C, weight Q)."""

    c_ref: float
    q: float = 1.0


def nonmonotone_update(st: NonmonotoneState, f_new: float, eta: float) -> NonmonotoneState:
    """Fold a new objective value into the nonmonotone reference."""
    q_new = eta * st.q + 1.0
    c_new = (eta * st.q * st.c_ref + f_new) / q_new
    return NonmonotoneState(c_ref=c_new, q=q_new)


def bb_stepsize(s: np.ndarray, g_diff: np.ndarray, parity: int, alpha0: float = 1e-3,
                fallback: float | None = None) -> float:
    """Alternating long/short Barzilai-Borwein step from iterate/gradient moves.

    Even parity takes <s,s>/<s,y>, odd <s,y>/<y,y>; a nonpositive or
    degenerate denominator falls back to ``alpha0`` (or ``fallback`` when
    given; the solver passes the long-step cap there, since tiny fixed
    steps stall in negative-curvature regions). Clamped to [1e-10, 1e10].
    """
    if parity % 2 == 0:
        num, den = float(np.vdot(s, s)), float(np.vdot(s, g_diff))
    else:
        num, den = float(np.vdot(s, g_diff)), float(np.vdot(g_diff, g_diff))
    if den <= 0.0 or not np.isfinite(num) or num <= 0.0:
        return alpha0 if fallback is None else fallback
    return min(max(num / den, 1e-10), 1e10)


def update_epsilon(eps_prev: float, f_k_best: float, f_best: float, cfg: SolverConfig) -> float:
    """Keep eps on improvement, otherwise shrink it toward the floor."""
    if f_k_best < f_best:
        return eps_prev
    return max(cfg.gamma * eps_prev, cfg.eps_min)


def update_sigma(sigma_k: float, sigma0: float, cfg: SolverConfig) -> float:
    """Continuation step for the regularization weight.

    Halves through the negative (convexifying) phase, visits zero once,
    re-enters positive at sigma_plus = -2^(-l) sigma0 with
    l = ceil(log2(-sigma0)), then doubles, capped at sigma_max.
    """
    if sigma0 > cfg.sigma_minus:
        raise ValueError("sigma0 must not exceed sigma_minus")
    if sigma_k <= cfg.sigma_minus:
        nxt = 0.5 * sigma_k
    elif sigma_k < 0.0:
        nxt = 0.0
    elif sigma_k == 0.0:
        ell = int(np.ceil(np.log2(-sigma0)))
        nxt = -(2.0 ** (-ell)) * sigma0
    else:
        nxt = 2.0 * sigma_k
    return min(nxt, cfg.sigma_max)


def perturb_in_birkhoff(x: np.ndarray, beta: float, rng: np.random.Generator,
                        proj_tol: float = 1e-8) -> np.ndarray:
    """Convex combination of ``x`` with the projection of a random matrix."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if beta == 0.0:
        return x
    z = project_birkhoff(rng.uniform(size=x.shape), proj_tol).x
    return (1.0 - beta) * x + beta * z


@dataclass
class _BestTracker:
    """Running best permutation over all rounding/polish calls of a run."""

    inst: QapInstance
    f_best: float = np.inf
    pi_best: np.ndarray | None = None

    def consider_point(self, x: np.ndarray) -> float:
        pi, f = round_and_polish(self.inst, x)
        return self.consider_perm(pi, f)

    def consider_perm(self, pi: np.ndarray, f_scaled: float) -> float:
        if f_scaled < self.f_best:
            self.f_best = f_scaled
            self.pi_best = pi.copy()
        return f_scaled


@dataclass
class _SubproblemStats:
    x: np.ndarray
    nfe: int
    f_round_best: float        # best scaled objective from polished iterates
    first_move: float          # ||X^(1) - X^(0)||_F / sqrt(n)
    inner_iters: int
    status: str = "ok"


def solve_subproblem(inst: QapInstance, rp: RegParams, x_start: np.ndarray,
                     tau_x: float, tau_f: float, cfg: SolverConfig,
                     tracker: _BestTracker | None = None,
                     project=None, trace=None, outer_k: int = 0) -> _SubproblemStats:
    """Nonmonotone BB projected gradient on one regularized subproblem.

    Runs X <- X + delta^j D with D the projection-arc direction
    P(X - alpha grad F) - X and j the smallest backtracking power passing
    the nonmonotone test. Stops when both the iterate movement (scaled by
    sqrt(n)) and relative objective change fall below their taus. Every
    ``local_search_every`` iterations the iterate is rounded and polished
    into ``tracker``.
    """
    if project is None:
        project = lambda c: project_birkhoff(c, cfg.proj_tol).x
    if tracker is None:
        tracker = _BestTracker(inst)
    n = inst.n
    sqrt_n = float(np.sqrt(n))
    x = x_start
    f_cur, g_cur = F_value_grad(inst, x, rp)
    nfe = 1
    nm = NonmonotoneState(c_ref=f_cur)
    alpha = cfg.alpha0
    f_round_best = np.inf
    first_move = np.nan
    status = "ok"
    i = 0
    while i < cfg.max_inner:
        d = project(x - alpha * g_cur) - x
        g_dot_d = float(np.vdot(g_cur, d))
        step = 1.0
        f_trial = None
        for _ in range(_LINESEARCH_MAX_BACKTRACKS + 1):
            f_trial = F_value(inst, x + step * d, rp)
            nfe += 1
            if f_trial <= nm.c_ref + cfg.theta * step * g_dot_d:
                break
            step *= cfg.delta
        else:
            status = "linesearch_stall"
            break
        x_new = x + step * d
        f_new = f_trial
        g_new = F_grad(inst, x_new, rp)
        move = float(np.linalg.norm(x_new - x))
        tol_x = move / sqrt_n
        tol_f = abs(f_new - f_cur) / (1.0 + abs(f_cur))
        if i == 0:
            first_move = tol_x
        if trace is not None:
            trace.write(json.dumps({
                "k": outer_k, "i": i, "F": f_new, "tol_x": tol_x, "tol_f": tol_f,
                "sigma": rp.sigma, "eps": rp.eps,
                "ls_rhs": nm.c_ref + cfg.theta * step * g_dot_d,
            }) + "\n")
        if i % cfg.local_search_every == 0:
            f_round = tracker.consider_point(x_new)
            f_round_best = min(f_round_best, f_round)
        alpha = bb_stepsize(x_new - x, g_new - g_cur, parity=i, alpha0=cfg.alpha0,
                            fallback=1e10)
        nm = nonmonotone_update(nm, f_new, cfg.eta)
        x, f_cur, g_cur = x_new, f_new, g_new
        i += 1
        if tol_x <= tau_x and tol_f <= tau_f:
            break
    else:
        status = "max_inner"
    if not np.isfinite(f_round_best):
        f_round = tracker.consider_point(x)
        f_round_best = min(f_round_best, f_round)
    return _SubproblemStats(x=x, nfe=nfe, f_round_best=f_round_best,
                            first_move=first_move, inner_iters=i, status=status)


def initial_sigma(nu_under_f: float, cfg: SolverConfig) -> float:
    """Starting weight of the continuation, always at most sigma_minus."""
    guess = nu_under_f / (cfg.p * (1.0 - cfg.p)) * cfg.eps0 ** (2.0 - cfg.p)
    return min(guess, cfg.sigma_minus)


def run_lp(inst: QapInstance, cfg: SolverConfig | None = None,
           cuts: list[Cut] | None = None, prox: tuple[float, np.ndarray] | None = None,
           trace=None) -> SolveResult:
    """Full continuation run; returns the best permutation found anywhere.

    ``cuts`` restricts every projection to the polytope intersected with the
    given halfspaces; ``prox`` = (mu, x_hat) adds the negative proximal
    term. Both hooks are used by the enhancement wrappers.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    n = inst.n
    rng = np.random.default_rng(cfg.seed)
    cb = curvature_bounds(inst)

    prox_mu_eff = prox[0] if prox is not None else 0.0
    # The proximal term shifts the curvature of the smooth part by -2 mu;
    # the continuation must convexify the objective actually being solved.
    nu_under_eff = cb.nu_under_f - 2.0 * prox_mu_eff
    nu_bar_eff = cb.nu_bar_f - 2.0 * prox_mu_eff
    if cfg.l2_mode:
        # Quadratic regularizer ||X||_F^2 driven by the same continuation,
        # from convexifying (positive weight) to concave (negative weight).
        sigma0 = min(nu_under_eff / 2.0, cfg.sigma_minus)
        sigma_exhaust = min(cfg.sigma_max, max(abs(nu_bar_eff), 100.0 * abs(sigma0), 1.0))
    else:
        sigma0 = initial_sigma(nu_under_eff, cfg)
        # Beyond the exactness threshold the model's solutions are already
        # vertices; keep doubling a little past it, then treat stagnation as
        # exhaustion (matters for cut-restricted runs, where the vertex
        # guard below may never fire).
        nu_bar_h_min = cfg.p * (1.0 - cfg.p) * (1.0 + cfg.eps_min) ** (cfg.p - 2.0)
        sigma_star = max(nu_bar_eff / nu_bar_h_min, 0.0)
        sigma_exhaust = min(cfg.sigma_max, max(4.0 * sigma_star, 100.0 * abs(sigma0), 1.0))
    sigma = sigma0
    eps = cfg.eps0

    cuts = list(cuts) if cuts else []
    if cuts:
        project = lambda c: project_polytope(c, cuts, cfg.proj_tol)
    else:
        project = lambda c: project_birkhoff(c, cfg.proj_tol).x
    prox_mu, x_hat = (prox if prox is not None else (0.0, None))

    tracker = _BestTracker(inst)
    x = np.full((n, n), 1.0 / n)
    trace_records: list[OuterRecord] = []
    nfe = 0
    k = 0
    status = "ok"
    stagnant_at_cap = 0
    while k < cfg.max_outer:
        if reg_h_value(x, cfg.p, 0.0) / n - 1.0 <= cfg.tol:
            break
        kk = k + 1  # tau schedule counts outer rounds from one
        tau_x = max(cfg.tau0_x / kk**3, cfg.tau_min_x)
        tau_f = max(cfg.tau0_f / kk**3, cfg.tau_min_f)
        if cfg.l2_mode:
            rp = RegParams(p=cfg.p, eps=eps, sigma=0.0, prox_mu=prox_mu,
                           x_hat=x_hat, l2=-sigma)
        else:
            rp = RegParams(p=cfg.p, eps=eps, sigma=sigma, prox_mu=prox_mu, x_hat=x_hat)
        f_best_prev = tracker.f_best
        stats = solve_subproblem(inst, rp, x, tau_x, tau_f, cfg,
                                 tracker=tracker, project=project, trace=trace, outer_k=k)
        if k > 0 and np.isfinite(stats.first_move) and stats.first_move < cfg.tau_min_x:
            # Warm start was already stationary for the new parameters:
            # restart this subproblem from a perturbation of X_k.
            nfe += stats.nfe
            x0 = perturb_in_birkhoff(x, _PERTURB_BETA, rng, cfg.proj_tol)
            if cuts:
                x0 = project(x0)
            stats = solve_subproblem(inst, rp, x0, tau_x, tau_f, cfg,
                                     tracker=tracker, project=project, trace=trace, outer_k=k)
        nfe += stats.nfe
        improved = stats.f_round_best < f_best_prev
        eps_used = rp.eps
        sigma_used = rp.sigma if not cfg.l2_mode else -rp.l2
        eps = update_epsilon(eps, stats.f_round_best, f_best_prev, cfg)
        sigma = update_sigma(sigma, sigma0, cfg)
        x = stats.x
        k += 1
        trace_records.append(OuterRecord(
            k=k, sigma=sigma_used, eps=eps_used,
            f_round=inst.unscale(stats.f_round_best),
            f_best=inst.unscale(tracker.f_best)))
        if abs(sigma) >= sigma_exhaust and eps <= cfg.eps_min and not improved:
            stagnant_at_cap += 1
            if stagnant_at_cap >= 2:
                status = "continuation_exhausted"
                break
        else:
            stagnant_at_cap = 0
    else:
        status = "max_outer"

    tracker.consider_point(x)
    pi = tracker.pi_best
    f_scaled = tracker.f_best
    f_unscaled = inst.unscale(f_scaled)
    gap = relative_gap(f_unscaled, inst.obj_best) if inst.obj_best else None
    return SolveResult(
        x_best=pi,
        f_best=f_unscaled,
        gap_percent=gap,
        nfe=nfe,
        outer_iters=k,
        wall_time=time.perf_counter() - t0,
        trace=trace_records,
        converged=(status in ("ok", "continuation_exhausted")),
        status=status,
        vertex_gap=reg_h_value(x, cfg.p, 0.0) / n - 1.0,
    )


def solve_permutation_matrix(result: SolveResult) -> np.ndarray:
    """Matrix form of the best permutation in a result."""
    return perm_to_matrix(result.x_best)
