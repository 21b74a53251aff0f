import numpy as np
import pytest

from permlp.birkhoff import (
    Cut,
    EmptyIntersectionSuspected,
    project_birkhoff,
    project_halfspace,
    project_polytope,
)
from permlp.core import is_doubly_stochastic, perm_to_matrix

from oracles import dykstra_birkhoff, random_doubly_stochastic


class TestProjectBirkhoff:
    def test_fixed_point_of_member(self, rng):
        x = random_doubly_stochastic(rng, 6)
        res = project_birkhoff(x, 1e-8)
        assert res.converged
        assert np.linalg.norm(res.x - x) < 1e-6
        # feasible input is already dual-stationary at zero multipliers
        assert np.linalg.norm(res.dual.y) < 1e-4
        assert np.linalg.norm(res.dual.z) < 1e-4

    def test_two_by_two_closed_form(self):
        # polytope is the segment t*I + (1-t)*antidiag; minimizer clamps at t=1
        res = project_birkhoff(np.array([[2.0, 0.0], [0.0, 2.0]]))
        assert np.allclose(res.x, np.eye(2), atol=1e-7)

    def test_two_by_two_generic(self, rng):
        for _ in range(20):
            c = rng.normal(size=(2, 2))
            t = np.clip((c[0, 0] + c[1, 1] - c[0, 1] - c[1, 0] + 2.0) / 4.0, 0.0, 1.0)
            expected = t * np.eye(2) + (1 - t) * (np.ones((2, 2)) - np.eye(2))
            res = project_birkhoff(c)
            assert np.allclose(res.x, expected, atol=1e-6)

    def test_matches_dykstra_oracle(self, rng):
        for _ in range(20):
            c = rng.normal(size=(10, 10))
            res = project_birkhoff(c, 1e-8)
            oracle = dykstra_birkhoff(c, 1e-10)
            assert np.linalg.norm(res.x - oracle) < 1e-5

    def test_feasibility_and_nonnegativity(self, rng):
        c = rng.normal(size=(8, 8)) * 3
        res = project_birkhoff(c, 1e-8)
        assert np.abs(res.x.sum(axis=0) - 1).max() <= 1e-8
        assert np.abs(res.x.sum(axis=1) - 1).max() <= 1e-8
        assert res.x.min() >= 0.0  # clamp is exact

    def test_primal_reconstructs_from_dual(self, rng):
        c = rng.normal(size=(6, 6))
        res = project_birkhoff(c, 1e-8)
        rebuilt = np.maximum(c + np.add.outer(res.dual.y, res.dual.z), 0.0)
        assert np.array_equal(res.x, rebuilt)

    def test_idempotent(self, rng):
        c = rng.normal(size=(7, 7))
        x1 = project_birkhoff(c, 1e-8).x
        x2 = project_birkhoff(x1, 1e-8).x
        assert np.linalg.norm(x2 - x1) <= 2e-8

    def test_nonexpansive(self, rng):
        for _ in range(10):
            c1 = rng.normal(size=(6, 6))
            c2 = c1 + rng.normal(size=(6, 6)) * 0.5
            x1 = project_birkhoff(c1, 1e-8).x
            x2 = project_birkhoff(c2, 1e-8).x
            assert np.linalg.norm(x1 - x2) <= np.linalg.norm(c1 - c2) + 2e-8

    def test_dual_objective_convex(self, rng):
        # midpoint inequality of theta on random dual pairs
        c = rng.normal(size=(5, 5))
        e = np.ones(5)

        def theta(y, z):
            xp = np.maximum(c + np.add.outer(y, z), 0.0)
            return 0.5 * np.sum(xp * xp) - float((y + z) @ e)

        for _ in range(50):
            y1, z1 = rng.normal(size=5), rng.normal(size=5)
            y2, z2 = rng.normal(size=5), rng.normal(size=5)
            mid = theta(0.5 * (y1 + y2), 0.5 * (z1 + z2))
            assert mid <= 0.5 * (theta(y1, z1) + theta(y2, z2)) + 1e-10

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            project_birkhoff(np.eye(3), 0.0)


class TestProjectHalfspace:
    def test_interior_point_unchanged(self):
        cut = Cut(g=np.ones((2, 2)), b=10.0)
        x = np.eye(2)
        assert project_halfspace(x, cut) is x

    def test_forced_arithmetic(self):
        cut = Cut(g=np.ones((2, 2)), b=0.0)
        out = project_halfspace(np.ones((2, 2)), cut)
        assert np.allclose(out, np.zeros((2, 2)))

    def test_projection_optimality_1d(self, rng):
        # closest point lies along g; check against a scalar line search
        g = rng.normal(size=(4, 4))
        cut = Cut(g=g, b=-1.0)
        x = rng.normal(size=(4, 4))
        out = project_halfspace(x, cut)
        assert float(np.vdot(cut.g, out)) <= cut.b + 1e-12
        ts = np.linspace(0, 2 * np.abs(cut.violation(x)) / np.sum(g * g) + 1, 2001)
        cands = [x - t * g for t in ts]
        feas = [c for c in cands if float(np.vdot(g, c)) <= cut.b + 1e-9]
        best = min(np.linalg.norm(c - x) for c in feas)
        assert np.linalg.norm(out - x) <= best + 1e-6

    def test_zero_normal_rejected(self):
        with pytest.raises(ValueError):
            Cut(g=np.zeros((2, 2)), b=1.0)


class TestProjectPolytope:
    def test_no_cuts_equals_plain(self, rng):
        c = rng.normal(size=(6, 6))
        assert np.allclose(project_polytope(c, [], 1e-8),
                           project_birkhoff(c, 1e-8).x, atol=1e-10)

    def test_feasible_point_fixed(self, rng):
        x = random_doubly_stochastic(rng, 5)
        cut = Cut(g=np.ones((5, 5)), b=10.0)  # satisfied everywhere on the polytope
        out = project_polytope(x, [cut], 1e-8)
        assert np.linalg.norm(out - x) < 1e-6

    def test_identity_cut_case_against_dense_qp(self):
        # project the identity onto D_4 cut by <I, X> <= 1
        n = 4
        cut = Cut(g=np.eye(n), b=1.0, label="LC2")
        out = project_polytope(np.eye(n), [cut], 1e-8)
        oracle = _dense_qp_projection(np.eye(n), [(np.eye(n), 1.0)])
        assert np.linalg.norm(out - oracle) < 1e-4
        assert is_doubly_stochastic(out, 1e-6)
        assert float(np.vdot(np.eye(n), out)) <= 1.0 + 1e-6

    def test_random_cut_against_dense_qp(self, rng):
        n = 4
        g = rng.normal(size=(n, n))
        cut = Cut(g=g, b=-0.5)
        c = rng.normal(size=(n, n))
        out = project_polytope(c, [cut], 1e-8)
        oracle = _dense_qp_projection(c, [(g, -0.5)])
        assert np.linalg.norm(out - oracle) < 1e-4

    def test_empty_intersection_detected(self):
        n = 3
        # <ones, X> = n on the whole polytope; force <ones, X> <= n - 1
        cut = Cut(g=np.ones((n, n)), b=float(n - 1))
        with pytest.raises(EmptyIntersectionSuspected):
            project_polytope(np.eye(n), [cut], 1e-8)


def _dense_qp_projection(c, cuts):
    """Dense QP oracle: min ||X - c||_F^2 over the polytope with extra cuts."""
    import cvxpy as cp

    n = c.shape[0]
    x = cp.Variable((n, n), nonneg=True)
    constraints = [cp.sum(x, axis=0) == 1, cp.sum(x, axis=1) == 1]
    for g, b in cuts:
        constraints.append(cp.sum(cp.multiply(g, x)) <= b)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(x - c)), constraints)
    prob.solve()
    assert prob.status == "optimal", prob.status
    return x.value
