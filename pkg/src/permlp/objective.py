"""QAP objective, Lp regularizer, the composite model and its thresholds.

The composite model minimized over the doubly stochastic polytope is

    F(X) = f(X) + sigma * sum_ij (X_ij + eps)^p  - mu * ||X - x_hat||_F^2
           (+ l2 * ||X||_F^2 in the quadratic-regularizer mode)

with f(X) = tr(A^T X B X^T). All functions are pure; curvature bounds may be
computed once per instance and shared freely between readers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .core import FEAS_TOL, QapInstance, as_square_matrix


class NegativeBase(ValueError):
    """Some entry of X + eps is negative, so (X + eps)^p is undefined."""


class GradientSingular(ValueError):
    """(X + eps)^(p-1) diverges: eps == 0 at a zero entry with sigma != 0."""


@dataclass(frozen=True)
class RegParams:
    """Parameters of the regularized objective.

    ``prox_mu``/``x_hat`` add the negative proximal term; ``l2`` adds a
    signed quadratic term (the L2 continuation baseline reuses it).
    """

    p: float
    eps: float
    sigma: float
    prox_mu: float = 0.0
    x_hat: np.ndarray | None = None
    l2: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0,1), got {self.p}")
        if self.eps < 0.0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.prox_mu != 0.0 and self.x_hat is None:
            raise ValueError("x_hat required when prox_mu is set")


@dataclass(frozen=True)
class CurvatureBounds:
    """Extremal eigenvalues of the quadratic-form Hessian operator.

    ``nu_bar_f``/``nu_under_f`` bound the curvature of f over the polytope;
    ``lip_l`` is the gradient Lipschitz constant max(|nu_bar|, |nu_under|).
    """

    nu_bar_f: float
    nu_under_f: float
    lip_l: float
    grad_at_zero_norm: float
    converged: bool = True


def f_value(inst: QapInstance, x: np.ndarray) -> float:
    """tr(A^T X B X^T) on the scaled data."""
    x = _check_dims(inst, x)
    return float(np.vdot(inst.a @ x, x @ inst.b))


def f_grad(inst: QapInstance, x: np.ndarray) -> np.ndarray:
    """Gradient A X B^T + A^T X B of the QAP objective."""
    x = _check_dims(inst, x)
    return (inst.a @ x) @ inst.b.T + inst.a.T @ (x @ inst.b)


def f_value_perm(inst: QapInstance, pi: np.ndarray) -> float:
    """Scaled objective at a permutation: sum_ij A[pi_i, pi_j] * B[i, j]."""
    p = np.asarray(pi, dtype=int)
    return float((inst.a[np.ix_(p, p)] * inst.b).sum())


def _check_dims(inst: QapInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != inst.a.shape:
        raise ValueError(f"iterate shape {x.shape} does not match instance n={inst.n}")
    return x


def reg_h_value(x: np.ndarray, p: float, eps: float) -> float:
    """Separable regularizer sum_ij (x_ij + eps)^p."""
    x = np.asarray(x, dtype=float)
    shifted = x + eps
    if shifted.min() < 0.0:
        raise NegativeBase(f"min(x + eps) = {shifted.min():.3e} < 0")
    return float(np.sum(shifted**p))


def F_value(inst: QapInstance, x: np.ndarray, rp: RegParams) -> float:
    """Composite objective value (no gradient)."""
    val = f_value(inst, x)
    if rp.sigma != 0.0:
        val += rp.sigma * reg_h_value(x, rp.p, rp.eps)
    if rp.l2 != 0.0:
        val += rp.l2 * float(np.sum(x * x))
    if rp.prox_mu != 0.0:
        d = x - rp.x_hat
        val -= rp.prox_mu * float(np.sum(d * d))
    return val


def F_value_grad(inst: QapInstance, x: np.ndarray, rp: RegParams) -> tuple[float, np.ndarray]:
    """Composite objective value and gradient at ``x``."""
    x = _check_dims(inst, x)
    val = f_value(inst, x)
    grad = f_grad(inst, x)
    if rp.sigma != 0.0:
        shifted = x + rp.eps
        if shifted.min() < 0.0:
            raise NegativeBase(f"min(x + eps) = {shifted.min():.3e} < 0")
        if rp.eps == 0.0 and shifted.min() == 0.0:
            raise GradientSingular("eps = 0 at a zero entry: (x + eps)^(p-1) diverges")
        val += rp.sigma * float(np.sum(shifted**rp.p))
        grad = grad + rp.sigma * rp.p * shifted ** (rp.p - 1.0)
    if rp.l2 != 0.0:
        val += rp.l2 * float(np.sum(x * x))
        grad = grad + 2.0 * rp.l2 * x
    if rp.prox_mu != 0.0:
        d = x - rp.x_hat
        val -= rp.prox_mu * float(np.sum(d * d))
        grad = grad - 2.0 * rp.prox_mu * d
    return val, grad


def F_grad(inst: QapInstance, x: np.ndarray, rp: RegParams) -> np.ndarray:
    """Composite gradient only; used after a line search already paid for the value."""
    x = _check_dims(inst, x)
    grad = f_grad(inst, x)
    if rp.sigma != 0.0:
        shifted = x + rp.eps
        if shifted.min() < 0.0:
            raise NegativeBase(f"min(x + eps) = {shifted.min():.3e} < 0")
        if rp.eps == 0.0 and shifted.min() == 0.0:
            raise GradientSingular("eps = 0 at a zero entry: (x + eps)^(p-1) diverges")
        grad = grad + rp.sigma * rp.p * shifted ** (rp.p - 1.0)
    if rp.l2 != 0.0:
        grad = grad + 2.0 * rp.l2 * x
    if rp.prox_mu != 0.0:
        grad = grad - 2.0 * rp.prox_mu * (x - rp.x_hat)
    return grad


def _hessian_operator(inst: QapInstance) -> LinearOperator:
    """Matrix-free D -> A D B^T + A^T D B acting on vec'd n^2 vectors."""
    n = inst.n
    a, b = inst.a, inst.b

    def matvec(v):
        d = v.reshape(n, n)
        return ((a @ d) @ b.T + a.T @ (d @ b)).ravel()

    return LinearOperator((n * n, n * n), matvec=matvec, dtype=float)


def _power_extremal(op: LinearOperator, n2: int, maxiter: int = 5000) -> tuple[float, float, bool]:
    """Shifted power iterations: dominant |lambda|, then both signed extremes."""
    v0 = np.ones(n2) + 1e-3 * np.arange(n2) / n2
    v0 /= np.linalg.norm(v0)

    def dominant(apply_op, v):
        lam = 0.0
        ok = False
        for _ in range(maxiter):
            w = apply_op(v)
            norm = np.linalg.norm(w)
            if norm < 1e-300:
                return 0.0, v, True
            v = w / norm
            lam_new = float(v @ apply_op(v))
            if abs(lam_new - lam) <= 1e-14 * (1.0 + abs(lam_new)):
                lam, ok = lam_new, True
                break
            lam = lam_new
        return lam, v, ok

    r, v, ok1 = dominant(op.matvec, v0)
    r = abs(r)
    shift = r + 1.0
    hi, _, ok2 = dominant(lambda u: op.matvec(u) + shift * u, v0)
    nu_bar = hi - shift
    lo, _, ok3 = dominant(lambda u: shift * u - op.matvec(u), v0)
    nu_under = shift - lo
    return nu_bar, nu_under, ok1 and ok2 and ok3


def curvature_bounds(inst: QapInstance, maxiter: int = 5000) -> CurvatureBounds:
    """Extremal eigenvalues of B^T (x) A^T + B (x) A, never materialized.

    Uses matrix-free Lanczos with a deterministic start vector and falls
    back to shifted power iterations when Lanczos fails to converge. The
    estimates are nudged outward by a relative 1e-9 so that downstream
    curvature inequalities hold with certified bounds.
    """
    n2 = inst.n * inst.n
    op = _hessian_operator(inst)
    v0 = np.ones(n2) + 1e-3 * np.arange(n2) / n2
    converged = True
    try:
        hi = eigsh(op, k=1, which="LA", v0=v0, maxiter=maxiter,
                   return_eigenvectors=False, tol=0)
        lo = eigsh(op, k=1, which="SA", v0=v0, maxiter=maxiter,
                   return_eigenvectors=False, tol=0)
        nu_bar, nu_under = float(hi[0]), float(lo[0])
    except ArpackNoConvergence:
        nu_bar, nu_under, converged = _power_extremal(op, n2, maxiter)

    pad_hi = 1e-9 * (1.0 + abs(nu_bar))
    pad_lo = 1e-9 * (1.0 + abs(nu_under))
    nu_bar += pad_hi
    nu_under -= pad_lo
    grad0 = float(np.linalg.norm(f_grad(inst, np.zeros((inst.n, inst.n)))))
    return CurvatureBounds(
        nu_bar_f=nu_bar,
        nu_under_f=nu_under,
        lip_l=max(abs(nu_bar), abs(nu_under)),
        grad_at_zero_norm=grad0,
        converged=converged,
    )


def sigma_thresholds(cb: CurvatureBounds, p: float, eps: float) -> tuple[float, float]:
    """Strong-concavity parameter of the regularizer and the exactness threshold.

    Returns ``(nu_bar_h, sigma_star)`` with nu_bar_h = p(1-p)(1+eps)^(p-2);
    any regularization weight above sigma_star makes the composite model's
    global solutions coincide with the unregularized problem's.
    """
    if not 0.0 < p < 1.0 or eps < 0.0:
        raise ValueError("need 0 < p < 1 and eps >= 0")
    nu_bar_h = p * (1.0 - p) * (1.0 + eps) ** (p - 2.0)
    sigma_star = max(cb.nu_bar_f / nu_bar_h, 0.0)
    return nu_bar_h, sigma_star


def sigma_bar_local(cb: CurvatureBounds, n: int, p: float, eps: float, c: float = 2.0) -> float:
    """Diagnostic threshold above which every permutation is a local minimizer.

    Requires eps > 0. Not used by the solver; the constant multiplier just
    has to exceed one.
    """
    if eps <= 0.0:
        raise ValueError("the local-minimizer threshold needs eps > 0")
    denom = eps ** (p - 1.0) - (0.5 + eps) ** (p - 1.0)
    return (c / p) * (cb.lip_l * (2.0 + np.sqrt(n)) + cb.grad_at_zero_norm) / denom


def nonzero_lower_bound(inst: QapInstance, cb: CurvatureBounds, x: np.ndarray,
                        rp: RegParams, entry_tol: float = FEAS_TOL) -> tuple[float, bool]:
    """Lower bound on the nonzero entries of a stationary point.

    Entries of an (approximate) KKT point lying strictly between zero and
    the bound indicate the point may be rounded down. Returns
    ``(bound, vacuous)``; the bound is vacuous when the bracketed base is
    not positive.
    """
    if rp.sigma <= 0.0:
        raise ValueError("the lower bound requires sigma > 0")
    x = _check_dims(inst, x)
    n = inst.n
    nnz = int(np.count_nonzero(x > entry_tol))
    base = (
        nnz ** (1.0 - rp.p) * (n + nnz * rp.eps) ** rp.p
        - (n - 1) * (1.0 + rp.eps) ** (rp.p - 1.0)
        + np.sqrt(2.0 * n) * (cb.lip_l * np.sqrt(n) + cb.grad_at_zero_norm) / (rp.sigma * rp.p)
    )
    if base <= 0.0:
        return 0.0, True
    c_bar = base ** (1.0 / (rp.p - 1.0))
    return max(c_bar - rp.eps, 0.0), False
