"""Euclidean projection onto the doubly stochastic polytope and cut-restricted sets.

The plain projection solves the dual of  min 0.5 ||X - C||_F^2  over row/column
sums one and X >= 0 with a Barzilai-Borwein gradient method on the two
multiplier vectors ("dualBB"). Projections onto the polytope intersected with
affine cuts run cyclic Dykstra corrections over {polytope, each halfspace}.

All operations are stateless; independent projections may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_square_matrix

# dualBB safeguards: step clamp, iteration cap, default gradient tolerance.
_STEP_MIN, _STEP_MAX = 1e-10, 1e10
_DUALBB_MAXITER = 10000
DEFAULT_PROJ_TOL = 1e-8

_DYKSTRA_MAX_SWEEPS = 50000
_DIVERGENCE_NORM = 1e6


class EmptyIntersectionSuspected(RuntimeError):
    """Dykstra correction terms diverged; the cut set is likely infeasible."""


@dataclass(frozen=True)
class DualPoint:
    """Multipliers of the row (y) and column (z) sum constraints."""

    y: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class Cut:
    """Affine halfspace <g, X> <= b over matrices."""

    g: np.ndarray
    b: float
    label: str = "other"

    def __post_init__(self):
        if not np.any(self.g):
            raise ValueError("cut normal must not be all-zero")

    def violation(self, x: np.ndarray) -> float:
        return float(np.vdot(self.g, x)) - self.b


@dataclass
class ProjectionResult:
    """Projection output with its dual certificate."""

    x: np.ndarray
    dual: DualPoint
    iters: int
    converged: bool


def project_birkhoff(c: np.ndarray, tol: float = DEFAULT_PROJ_TOL,
                     warm_dual: DualPoint | None = None) -> ProjectionResult:
    """Euclidean projection of ``c`` onto the doubly stochastic polytope.

    Minimizes the dual
        theta(y, z) = 0.5 ||max(C + y e^T + e z^T, 0)||_F^2 - <y + z, e>
    by BB gradient steps (first step 1/n, long/short BB rules alternating by
    iteration parity, no line search) until the dual gradient infinity norm
    is at most ``tol``. The primal is recovered by the exact clamp
    X = max(C + y e^T + e z^T, 0), so X >= 0 holds exactly and row/column
    sums match one within ``tol``.

    ``warm_dual`` seeds the multipliers, which pays off when projecting a
    sequence of nearby matrices. Iteration-capped rather than raising:
    check ``converged`` on the result.
    """
    c = as_square_matrix(c, "c")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = c.shape[0]
    if warm_dual is not None:
        u = np.concatenate([warm_dual.y, warm_dual.z])
    else:
        u = np.zeros(2 * n)  # stacked (y, z)

    def grad(u_vec):
        xp = np.maximum(c + np.add.outer(u_vec[:n], u_vec[n:]), 0.0)
        g = np.empty(2 * n)
        g[:n] = xp.sum(axis=1) - 1.0
        g[n:] = xp.sum(axis=0) - 1.0
        return g, xp

    g, xp = grad(u)
    best_u, best_norm = u.copy(), float(np.abs(g).max())
    step = 1.0 / n
    iters = 0
    while best_norm > tol and iters < _DUALBB_MAXITER:
        u_new = u - step * g
        g_new, xp = grad(u_new)
        norm = float(np.abs(g_new).max())
        if norm < best_norm:
            best_norm, best_u = norm, u_new.copy()
        s = u_new - u
        y_diff = g_new - g
        if iters % 2 == 0:
            num, den = float(s @ s), float(s @ y_diff)
        else:
            num, den = float(s @ y_diff), float(y_diff @ y_diff)
        if den > 0.0 and np.isfinite(num):
            step = min(max(num / den, _STEP_MIN), _STEP_MAX)
        else:
            step = 1.0 / n
        u, g = u_new, g_new
        iters += 1

    converged = best_norm <= tol
    y, z = best_u[:n], best_u[n:]
    x = np.maximum(c + np.add.outer(y, z), 0.0)
    return ProjectionResult(x=x, dual=DualPoint(y=y, z=z), iters=iters, converged=converged)


def project_halfspace(x: np.ndarray, cut: Cut) -> np.ndarray:
    """Closed-form Euclidean projection onto <g, X> <= b."""
    viol = cut.violation(x)
    if viol <= 0.0:
        return x
    return x - (viol / float(np.vdot(cut.g, cut.g))) * cut.g


def project_polytope(c: np.ndarray, cuts: list[Cut], tol: float = DEFAULT_PROJ_TOL) -> np.ndarray:
    """Projection of ``c`` onto the polytope intersected with the cuts.

    Cyclic Dykstra over {doubly stochastic set, each halfspace}, with the
    polytope first in the cycle. Halfspace corrections are tracked exactly;
    the polytope projection runs dualBB at a tighter tolerance. Stops when a
    full sweep moves the iterate less than ``tol``.

    Raises :class:`EmptyIntersectionSuspected` when the correction terms
    blow up, which happens when the cut set excludes the whole polytope.
    """
    c = as_square_matrix(c, "c")
    if not cuts:
        return project_birkhoff(c, tol).x
    inner_tol = min(tol, DEFAULT_PROJ_TOL)
    plain = project_birkhoff(c, inner_tol).x
    if all(cut.violation(plain) <= 1e-12 for cut in cuts):
        # The unrestricted projection lies in every halfspace, so it is also
        # the projection onto the intersection.
        return plain
    x = c.copy()
    q_birk = np.zeros_like(c)
    q_cut = [np.zeros_like(c) for _ in cuts]
    x_feasible = x
    corr_early = None
    dual = None  # successive sweeps project nearby points; reuse multipliers
    for sweep in range(_DYKSTRA_MAX_SWEEPS):
        x_prev = x
        proj = project_birkhoff(x + q_birk, inner_tol, warm_dual=dual)
        y, dual = proj.x, proj.dual
        q_birk = x + q_birk - y
        x_feasible = y  # polytope-side half step, always doubly stochastic
        x = y
        for i, cut in enumerate(cuts):
            y = project_halfspace(x + q_cut[i], cut)
            q_cut[i] = x + q_cut[i] - y
            x = y
        corr = max(np.abs(q).max() for q in [q_birk, *q_cut])
        if sweep == 20:
            corr_early = corr
        diverging = corr > _DIVERGENCE_NORM or (
            # corrections that keep growing long past the start signal an
            # empty intersection well before the absolute threshold
            corr_early is not None and corr > max(1e3, 100.0 * corr_early))
        if diverging:
            raise EmptyIntersectionSuspected(
                f"Dykstra correction norm {corr:.2e} suggests an empty intersection")
        if float(np.linalg.norm(x - x_prev)) < tol:
            # distance from the polytope-side point to each halfspace, in
            # Euclidean units; a stalled cycle that stays infeasible means
            # the sets do not intersect
            dist = max(max(cut.violation(x_feasible), 0.0) / np.linalg.norm(cut.g)
                       for cut in cuts)
            if dist <= max(10.0 * tol, 1e-7):
                break
            if sweep > 100:
                raise EmptyIntersectionSuspected(
                    f"cycle stalled {dist:.2e} away from the cut set")
    return x_feasible
