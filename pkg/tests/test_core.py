from itertools import permutations

import numpy as np
import pytest

from permlp.core import (
    AllZeroMatrix,
    NotPermutationLike,
    is_doubly_stochastic,
    matrix_to_perm,
    perm_to_matrix,
    relative_gap,
    scale_instance,
)
from permlp.objective import f_value_perm, reg_h_value

from conftest import random_instance
from oracles import qap_value_indexform, random_doubly_stochastic


class TestPermMatrix:
    def test_identity(self):
        assert np.array_equal(perm_to_matrix([0, 1, 2]), np.eye(3))

    def test_transposition(self):
        assert np.array_equal(perm_to_matrix([1, 0]), np.array([[0., 1.], [1., 0.]]))

    def test_round_trip_all_n4(self):
        for p in permutations(range(4)):
            assert np.array_equal(matrix_to_perm(perm_to_matrix(p)), np.array(p))

    def test_row_col_sums_exact(self, rng):
        for _ in range(20):
            p = rng.permutation(6)
            x = perm_to_matrix(p)
            assert np.array_equal(x.sum(axis=0), np.ones(6))
            assert np.array_equal(x.sum(axis=1), np.ones(6))

    def test_invalid_permutation_rejected(self):
        with pytest.raises(ValueError):
            perm_to_matrix([0, 0, 2])


class TestMatrixToPerm:
    def test_identity(self):
        assert np.array_equal(matrix_to_perm(np.eye(4)), np.arange(4))

    def test_dominant_diagonal(self):
        x = np.array([[0.9, 0.1], [0.1, 0.9]])
        assert np.array_equal(matrix_to_perm(x), [0, 1])

    def test_collision_raises(self):
        x = np.array([[0.6, 0.6], [0.4, 0.4]])
        with pytest.raises(NotPermutationLike):
            matrix_to_perm(x)


class TestRelativeGap:
    def test_zero_gap(self):
        assert relative_gap(578.0, 578.0) == 0.0

    def test_rgap_scale(self):
        assert relative_gap(1.405 * 123.0, 123.0) == pytest.approx(40.5)

    def test_double(self):
        assert relative_gap(24.0, 12.0) == 100.0

    def test_rejects_nonpositive_best(self):
        with pytest.raises(ValueError):
            relative_gap(1.0, 0.0)

    def test_affine_invariance(self, rng):
        for _ in range(50):
            obj = rng.uniform(1, 100)
            best = rng.uniform(0.5, obj)
            c = rng.uniform(0.1, 10)
            assert relative_gap(c * obj, c * best) == pytest.approx(relative_gap(obj, best))


class TestScaleInstance:
    def test_simple(self):
        inst = scale_instance([[0, 2], [2, 0]], [[0, 1], [1, 0]])
        assert np.array_equal(inst.a, [[0, 1], [1, 0]])
        assert inst.rho_a == 2.0 and inst.rho_b == 1.0

    def test_already_scaled(self):
        a = np.array([[0.0, 1.0], [0.5, 0.0]])
        inst = scale_instance(a, a)
        assert inst.rho_a == 1.0
        assert np.array_equal(inst.a, a)

    def test_all_zero_rejected(self):
        with pytest.raises(AllZeroMatrix):
            scale_instance(np.zeros((2, 2)), np.eye(2))

    def test_unscale_identity(self, rng):
        for seed in range(5):
            gen = np.random.default_rng(seed)
            a = gen.integers(-7, 9, size=(5, 5)).astype(float)
            b = gen.integers(1, 11, size=(5, 5)).astype(float)
            inst = scale_instance(a, b)
            pi = gen.permutation(5)
            raw = qap_value_indexform(a, b, pi)
            assert inst.unscale(f_value_perm(inst, pi)) == pytest.approx(raw, rel=1e-12)


class TestBirkhoffInvariant:
    def test_lp_norm_floor_on_polytope(self, rng):
        # ||X||_p^p >= n on the polytope, equality exactly at permutations
        n = 5
        for p in (0.25, 0.5, 0.75):
            for _ in range(10):
                x = random_doubly_stochastic(rng, n)
                assert reg_h_value(x, p, 0.0) >= n - 1e-8
            pi = rng.permutation(n)
            assert reg_h_value(perm_to_matrix(pi), p, 0.0) == pytest.approx(n)

    def test_all_permutations_n4_attain_floor(self):
        for p in permutations(range(4)):
            assert reg_h_value(perm_to_matrix(p), 0.5, 0.0) == pytest.approx(4.0)

    def test_is_doubly_stochastic(self, rng):
        x = random_doubly_stochastic(rng, 6)
        assert is_doubly_stochastic(x, 1e-8)
        assert not is_doubly_stochastic(x + 1e-3, 1e-8)
