"""Core types shared by every solver module.

Matrices are plain float64 numpy arrays; permutations are int arrays ``pi``
with the column convention ``pi[j] = i  <=>  X[i, j] = 1``. All indices are
0-based in memory; file formats and reports use 1-based indices (QAPLIB
convention) and the translation happens at the I/O boundary.

Everything here is immutable value data once constructed and safe to share
between concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Default feasibility tolerance for accepting a matrix as doubly stochastic.
FEAS_TOL = 1e-8


class NotPermutationLike(ValueError):
    """Column argmax of a matrix does not define a bijection."""


class AllZeroMatrix(ValueError):
    """Instance matrix has no nonzero entry, so it cannot be scaled."""


def as_square_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite square float64 array."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def check_permutation(pi) -> np.ndarray:
    """Validate ``pi`` as a bijection on 0..n-1 and return it as an int array."""
    p = np.asarray(pi, dtype=int)
    n = p.shape[0]
    if p.ndim != 1 or not np.array_equal(np.sort(p), np.arange(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {p}")
    return p


def is_doubly_stochastic(x: np.ndarray, tol: float = FEAS_TOL) -> bool:
    """Row/column sums within ``tol`` of one and entries >= -tol."""
    x = np.asarray(x, dtype=float)
    return (
        np.all(np.abs(x.sum(axis=1) - 1.0) <= tol)
        and np.all(np.abs(x.sum(axis=0) - 1.0) <= tol)
        and x.min() >= -tol
    )


def perm_to_matrix(pi) -> np.ndarray:
    """Permutation vector to 0/1 matrix with ``X[pi[j], j] = 1``."""
    p = check_permutation(pi)
    n = p.shape[0]
    x = np.zeros((n, n))
    x[p, np.arange(n)] = 1.0
    return x


def matrix_to_perm(x: np.ndarray) -> np.ndarray:
    """Recover the permutation from a (near-)permutation matrix.

    Takes the row argmax of each column. Raises :class:`NotPermutationLike`
    when two columns select the same row; ambiguous iterates should go
    through ``localsearch.greedy_round`` instead.
    """
    x = as_square_matrix(x)
    p = np.argmax(x, axis=0)
    if len(set(p.tolist())) != x.shape[0]:
        raise NotPermutationLike("column argmaxes collide; use greedy_round")
    return p


def relative_gap(obj: float, obj_best: float) -> float:
    """Percentage excess of ``obj`` over the best known objective."""
    if obj_best <= 0:
        raise ValueError(f"obj_best must be positive, got {obj_best}")
    return (obj - obj_best) / obj_best * 100.0


@dataclass(frozen=True)
class QapInstance:
    """A scaled QAP instance min tr(A^T X B X^T) over permutation matrices.

    ``a`` and ``b`` are scaled so their max absolute entry is one;
    ``rho_a * rho_b`` converts scaled objective values back to the
    original data.
    """

    a: np.ndarray
    b: np.ndarray
    rho_a: float
    rho_b: float
    name: str = ""
    obj_best: float | None = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def unscale(self, f_scaled: float) -> float:
        return self.rho_a * self.rho_b * f_scaled


def scale_instance(a_raw, b_raw, name: str = "", obj_best: float | None = None) -> QapInstance:
    """Scale both matrices to unit max-abs entry and remember the factors."""
    a = as_square_matrix(a_raw, "A")
    b = as_square_matrix(b_raw, "B")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: A is {a.shape}, B is {b.shape}")
    rho_a = float(np.abs(a).max())
    rho_b = float(np.abs(b).max())
    if rho_a == 0.0 or rho_b == 0.0:
        raise AllZeroMatrix("cannot scale an all-zero matrix")
    return QapInstance(a=a / rho_a, b=b / rho_b, rho_a=rho_a, rho_b=rho_b,
                       name=name, obj_best=obj_best)


@dataclass
class SolveResult:
    """Outcome of one solver run, reported on the unscaled data."""

    x_best: np.ndarray          # permutation vector, 0-based
    f_best: float               # unscaled objective at x_best
    gap_percent: float | None   # None when no best-known objective
    nfe: int                    # regularized-objective evaluations
    outer_iters: int
    wall_time: float
    trace: list = field(default_factory=list)   # OuterRecord per outer iteration
    converged: bool = True
    status: str = "ok"
    rounds: list = field(default_factory=list)  # RoundRecord for enhancement runs
    vertex_gap: float | None = None             # ||X||_p^p / n - 1 at exit


@dataclass(frozen=True)
class OuterRecord:
    """One outer-iteration snapshot: round best and running best objective."""

    k: int
    sigma: float
    eps: float
    f_round: float   # best unscaled objective found during this subproblem
    f_best: float    # running best after this subproblem


@dataclass(frozen=True)
class RoundRecord:
    """One enhancement round: objective after the round and its bookkeeping."""

    k: int
    f_best: float
    gap_percent: float | None
    n_cuts: int
    mu: float
