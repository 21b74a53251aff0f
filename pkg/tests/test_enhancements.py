from itertools import permutations

import numpy as np
import pytest

import permlp.enhancements as enh
from permlp.core import SolveResult, perm_to_matrix, scale_instance
from permlp.enhancements import (
    EnhanceConfig,
    default_c1,
    default_mu0,
    default_omega,
    make_lc1,
    make_lc2,
    run_lp_cp,
    run_lp_cp_negprox,
    run_lp_negprox,
)
from permlp.objective import curvature_bounds, f_value_perm
from permlp.solver import SolverConfig, run_lp

from conftest import random_instance
from oracles import exhaustive_qap, random_doubly_stochastic


class TestLC1:
    def setup_method(self):
        self.inst = random_instance(70, 4)
        self.cb = curvature_bounds(self.inst)
        self.omega = default_omega(self.cb)

    def test_source_point_violates_own_cut(self):
        pi = np.arange(4)
        cut = make_lc1(self.inst, self.cb, pi, c1=0.5, omega=self.omega)
        assert cut.violation(perm_to_matrix(pi)) > 0.0

    def test_better_permutations_survive(self):
        # every permutation improving by at least c1 satisfies the cut
        for seed in range(5):
            inst = random_instance(100 + seed, 4)
            cb = curvature_bounds(inst)
            omega = default_omega(cb)
            gen = np.random.default_rng(seed)
            pi_t = gen.permutation(4)
            f_t = f_value_perm(inst, pi_t)
            c1 = default_c1(inst, f_t)
            cut = make_lc1(inst, cb, pi_t, c1, omega)
            for p in permutations(range(4)):
                if f_value_perm(inst, np.array(p)) <= f_t - c1:
                    assert cut.violation(perm_to_matrix(p)) <= 1e-9

    def test_omega_zero_on_convex_objective(self):
        # with A = B = I the objective is already convex; omega = 0 gives the
        # plain gradient cut and better permutations still satisfy it
        from permlp.core import QapInstance
        inst = QapInstance(a=np.eye(4), b=np.eye(4), rho_a=1.0, rho_b=1.0)
        cb = curvature_bounds(inst)
        pi_t = np.array([1, 0, 2, 3])
        cut = make_lc1(inst, cb, pi_t, c1=0.5, omega=0.0)
        f_t = f_value_perm(inst, pi_t)
        for p in permutations(range(4)):
            if f_value_perm(inst, np.array(p)) <= f_t - 0.5:
                assert cut.violation(perm_to_matrix(p)) <= 1e-9


class TestLC2:
    def test_violation_count_n4(self):
        cut = make_lc2(np.arange(4))
        violators = sum(cut.violation(perm_to_matrix(p)) > 1e-12
                        for p in permutations(range(4)))
        assert violators == 7  # identity plus 6 transpositions

    def test_violation_count_n5(self):
        cut = make_lc2(np.arange(5))
        violators = sum(cut.violation(perm_to_matrix(p)) > 1e-12
                        for p in permutations(range(5)))
        assert violators == 11

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_count_formula(self, n, rng):
        pi_t = rng.permutation(n)
        cut = make_lc2(pi_t)
        violators = sum(cut.violation(perm_to_matrix(p)) > 1e-12
                        for p in permutations(range(n)))
        assert violators == 1 + n * (n - 1) // 2

    def test_source_violates(self):
        cut = make_lc2(np.arange(5))
        assert cut.violation(perm_to_matrix(np.arange(5))) == pytest.approx(3.0)


class TestEnhancedRuns:
    def test_kmax_one_equals_plain(self):
        inst = random_instance(71, 5)
        cfg = SolverConfig(seed=4)
        plain = run_lp(inst, cfg)
        wrapped = run_lp_cp(inst, cfg, EnhanceConfig(k_max=1))
        assert np.array_equal(plain.x_best, wrapped.x_best)
        assert plain.f_best == wrapped.f_best

    def test_cut_count_grows_two_per_round(self):
        inst = random_instance(72, 4)
        res = run_lp_cp(inst, SolverConfig(seed=0), EnhanceConfig(k_max=3))
        assert [r.n_cuts for r in res.rounds] == [2 * k for k in range(len(res.rounds))]

    def test_wrappers_never_worse_than_plain(self):
        for seed in (0, 1):
            inst = random_instance(73 + seed, 5)
            cfg = SolverConfig(seed=seed)
            base = run_lp(inst, cfg).f_best
            assert run_lp_cp(inst, cfg, EnhanceConfig(k_max=3)).f_best <= base + 1e-9
            assert run_lp_negprox(inst, cfg, EnhanceConfig(k_max=3)).f_best <= base + 1e-9
            assert run_lp_cp_negprox(inst, cfg, EnhanceConfig(k_max=3)).f_best <= base + 1e-9

    def test_zero_center_prox_keeps_ranking(self):
        # round one centers the proximal term at the zero matrix, which adds
        # the same constant to every permutation
        inst = random_instance(74, 4)
        _, argmins = exhaustive_qap(inst.a, inst.b)
        mu = 0.05
        vals = {}
        for p in permutations(range(4)):
            x = perm_to_matrix(p)
            vals[p] = f_value_perm(inst, np.array(p)) - mu * np.linalg.norm(x) ** 2
        best_prox = min(vals, key=vals.get)
        assert any(np.array_equal(np.array(best_prox), a) for a in argmins)

    def test_repeat_detection_stops_after_round_two(self, monkeypatch):
        inst = random_instance(75, 4)
        fixed = np.array([2, 0, 3, 1])

        def stub(inst_, cfg_=None, cuts=None, prox=None, trace=None):
            return SolveResult(x_best=fixed.copy(), f_best=1.0, gap_percent=None,
                               nfe=1, outer_iters=1, wall_time=0.0)

        monkeypatch.setattr(enh, "run_lp", stub)
        res = run_lp_negprox(inst, SolverConfig(seed=0), EnhanceConfig(k_max=10))
        assert len(res.rounds) == 2
        assert res.status == "repeat_detected"

    def test_prox_center_bookkeeping(self):
        inst = random_instance(76, 4)
        res = run_lp_cp_negprox(inst, SolverConfig(seed=5), EnhanceConfig(k_max=3))
        k = len(res.rounds)
        assert k >= 1
        # mu halves per round
        mus = [r.mu for r in res.rounds]
        for a, b in zip(mus, mus[1:]):
            assert b == pytest.approx(a / 2)

    def test_tiny_mu_behaves_like_cp(self):
        inst = random_instance(77, 4)
        cfg = SolverConfig(seed=6)
        cp = run_lp_cp(inst, cfg, EnhanceConfig(k_max=2))
        both = run_lp_cp_negprox(inst, cfg, EnhanceConfig(k_max=2, mu0=1e-12))
        assert np.array_equal(cp.x_best, both.x_best)

    def test_default_parameter_rules(self):
        inst = random_instance(78, 5)
        cb = curvature_bounds(inst)
        assert default_mu0(cb) == pytest.approx(
            min(0.5, (cb.nu_bar_f - cb.nu_under_f) / 100.0))
        assert default_omega(cb) == pytest.approx(1.0 - 0.5 * cb.nu_under_f)
        assert default_omega(cb) >= -cb.nu_under_f / 2.0  # convexity of the shift
        # integer raw data: one objective unit in scaled terms
        assert default_c1(inst, 3.0) == pytest.approx(1.0 / (inst.rho_a * inst.rho_b))


class TestNegProxEscapesStall:
    def test_chr12c_stall_broken(self, chr12c):
        # the plain continuation stalls above the optimum on this instance;
        # the proximal push away from found solutions reaches gap zero
        plain = run_lp(chr12c, SolverConfig(seed=7))
        prox = run_lp_negprox(chr12c, SolverConfig(seed=7), EnhanceConfig(k_max=10))
        assert plain.gap_percent > 0.0
        assert prox.gap_percent == pytest.approx(0.0, abs=1e-9)


class TestNegProxTheorem:
    def test_prox_solution_is_farthest_optimum(self, rng):
        # instance with symmetric structure so the base problem has ties
        ring = np.zeros((4, 4))
        for i in range(4):
            ring[i, (i + 1) % 4] = ring[(i + 1) % 4, i] = 1.0
        inst = scale_instance(ring, ring)
        vals = {p: f_value_perm(inst, np.array(p)) for p in permutations(range(4))}
        distinct = sorted(set(round(v, 9) for v in vals.values()))
        c2 = min(b - a for a, b in zip(distinct, distinct[1:]))
        f_star = distinct[0]
        optima = [p for p, v in vals.items() if abs(v - f_star) < 1e-9]
        assert len(optima) > 1  # ties are the interesting case
        n = 4
        mu = 0.9 * c2 / (2 * n)
        for _ in range(10):
            x_hat = random_doubly_stochastic(rng, 4)
            prox_vals = {p: vals[p] - mu * np.linalg.norm(perm_to_matrix(p) - x_hat) ** 2
                         for p in permutations(range(4))}
            p_mu = min(prox_vals, key=prox_vals.get)
            assert abs(vals[p_mu] - f_star) < 1e-9  # still a base optimum
            d_mu = np.linalg.norm(perm_to_matrix(p_mu) - x_hat)
            for p in optima:
                assert d_mu >= np.linalg.norm(perm_to_matrix(p) - x_hat) - 1e-9
