import math

import numpy as np
import pytest

from osbalance import (ScalingOverflowError, SolverConfig, Strategy,
                       build_matrix, gradient, imbalance, potential,
                       row_col_sums_at, run, scaled_matrix, stats,
                       verify_balance)
from conftest import (dense_gradient, dense_instance, dense_potential,
                      dense_row_col)

A22 = build_matrix(2, [(0, 1, 4.0), (1, 0, 1.0)])
SYM3 = build_matrix(3, [(0, 1, 2.0), (1, 0, 2.0), (1, 2, 5.0), (2, 1, 5.0),
                        (0, 2, 1.0), (2, 0, 1.0)])


class TestBuildMatrix:
    def test_diagonal_dropped(self):
        A = build_matrix(2, [(0, 1, 4.0), (1, 0, 1.0), (0, 0, 7.0)])
        assert A.m == 2
        assert A.dropped == 1

    def test_duplicates_summed(self):
        A = build_matrix(3, [(0, 1, 1.0), (0, 1, 2.0)])
        assert A.m == 1
        (i, j, v), = A.entries()
        assert (i, j, v) == (0, 1, 3.0)

    def test_negative_value_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            build_matrix(2, [(0, 1, -1.0)])

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            build_matrix(2, [(0, 2, 1.0)])

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValueError):
            build_matrix(0, [])

    def test_views_consistent(self):
        A = dense_instance(6, seed=3)
        from_rows = sorted((j, int(i), float(v))
                           for j in range(A.n)
                           for i, v in zip(A.row_index[j], A.row_value[j]))
        from_cols = sorted((int(i), j, float(v))
                           for j in range(A.n)
                           for i, v in zip(A.col_index[j], A.col_value[j]))
        assert from_rows == from_cols


class TestRowColSums:
    def test_identity_scaling(self):
        assert row_col_sums_at(A22, np.zeros(2), 0) == (4.0, 1.0)

    def test_balancing_scaling(self):
        u = np.array([-math.log(2.0), 0.0])
        r, c = row_col_sums_at(A22, u, 0)
        assert r == pytest.approx(2.0, rel=1e-14)
        assert c == pytest.approx(2.0, rel=1e-14)

    def test_matches_dense_oracle(self):
        A = dense_instance(5, seed=11)
        D = A.to_dense()
        rng = np.random.default_rng(5)
        u = rng.normal(size=5)
        for j in range(5):
            r, c = row_col_sums_at(A, u, j)
            ro, co = dense_row_col(D, u, j)
            assert r == pytest.approx(ro, rel=1e-12)
            assert c == pytest.approx(co, rel=1e-12)


class TestPotential:
    def test_zero_scaling_is_entry_sum(self):
        A = dense_instance(4, seed=2)
        assert potential(A, np.zeros(4)) == pytest.approx(
            float(A.coo_vals.sum()), rel=1e-14)

    def test_two_by_two_closed_form(self):
        u = np.array([-math.log(2.0), 0.0])
        assert potential(A22, u) == pytest.approx(4.0, rel=1e-14)

    def test_equals_sum_of_row_and_col_sums(self):
        A = dense_instance(6, seed=7)
        u = np.random.default_rng(7).normal(size=6)
        phi = potential(A, u)
        rs = sum(row_col_sums_at(A, u, j)[0] for j in range(6))
        cs = sum(row_col_sums_at(A, u, j)[1] for j in range(6))
        assert phi == pytest.approx(rs, rel=1e-12)
        assert phi == pytest.approx(cs, rel=1e-12)

    def test_overflow_is_an_error(self):
        u = np.array([800.0, -800.0])
        with pytest.raises(ScalingOverflowError):
            potential(A22, u)


class TestGradient:
    def test_two_by_two(self):
        assert np.allclose(gradient(A22, np.zeros(2)), [3.0, -3.0])

    def test_symmetric_matrix_has_zero_gradient(self):
        assert np.allclose(gradient(SYM3, np.zeros(3)), 0.0)

    def test_matches_finite_differences(self):
        A = dense_instance(5, seed=13)
        D = A.to_dense()
        u = np.random.default_rng(13).normal(scale=0.5, size=5)
        g = gradient(A, u)
        h = 1e-6
        for j in range(5):
            up = u.copy(); up[j] += h
            dn = u.copy(); dn[j] -= h
            fd = (dense_potential(D, up) - dense_potential(D, dn)) / (2 * h)
            assert abs(g[j] - fd) < 1e-5

    def test_gradient_sums_to_zero(self):
        for seed in range(5):
            A = dense_instance(6, seed=seed)
            u = np.random.default_rng(seed).normal(size=6)
            g = gradient(A, u)
            assert abs(g.sum()) < 1e-12 * np.abs(g).sum() + 1e-300


class TestImbalance:
    def test_symmetric_is_balanced(self):
        assert imbalance(SYM3, np.zeros(3)).normalized == 0.0

    def test_two_by_two_value(self):
        cert = imbalance(A22, np.zeros(2))
        assert cert.normalized == pytest.approx(1.2, rel=1e-14)
        assert cert.l1_gradient_norm == pytest.approx(6.0, rel=1e-14)
        assert cert.potential == pytest.approx(5.0, rel=1e-14)
        assert cert.normalized == cert.l1_gradient_norm / cert.potential

    def test_converged_run_meets_target(self):
        A = dense_instance(8, seed=19)
        rep = run(A, SolverConfig(eps=1e-8))
        assert rep.termination == "converged"
        assert imbalance(A, rep.u_final).normalized <= 1e-8

    def test_scale_invariance(self):
        A = dense_instance(5, seed=23)
        cA = build_matrix(5, [(int(i), int(j), 3.7 * float(v))
                              for i, j, v in A.entries()])
        u = np.random.default_rng(23).normal(size=5)
        a = imbalance(A, u).normalized
        b = imbalance(cA, u).normalized
        assert abs(a - b) <= 1e-14 * a

    def test_shift_invariance(self):
        A = dense_instance(5, seed=29)
        u = np.random.default_rng(29).normal(size=5)
        a = imbalance(A, u).normalized
        b = imbalance(A, u + 4.25).normalized
        assert abs(a - b) <= 1e-12 * a


class TestScaledMatrix:
    def test_identity(self):
        M = scaled_matrix(A22, np.zeros(2))
        assert np.array_equal(M.to_dense(), A22.to_dense())

    def test_two_by_two_balance(self):
        u = np.array([-math.log(2.0), 0.0])
        M = scaled_matrix(A22, u).to_dense()
        assert np.allclose(M, [[0.0, 2.0], [2.0, 0.0]], rtol=1e-14)

    def test_inverse_round_trip(self):
        A = dense_instance(6, seed=31)
        u = np.random.default_rng(31).normal(size=6)
        back = scaled_matrix(scaled_matrix(A, u), -u)
        assert np.allclose(back.to_dense(), A.to_dense(), rtol=1e-12)


class TestVerifyBalance:
    def test_symmetric(self):
        assert verify_balance(SYM3, np.zeros(3), 1e-12)

    def test_unbalanced(self):
        assert not verify_balance(A22, np.zeros(2), 1.0)

    def test_end_to_end(self):
        from osbalance import gen_kalantari
        K = gen_kalantari(40)
        rep = run(K, SolverConfig(eps=1e-8))
        assert rep.termination == "converged"
        assert verify_balance(K, rep.u_final, 1e-8)


def test_initial_to_optimal_potential_ratio_bounded_by_kappa():
    for seed in range(4):
        A = dense_instance(7, seed=seed)
        rep = run(A, SolverConfig(eps=1e-12))
        assert rep.termination == "converged"
        ratio = potential(A, np.zeros(7)) / potential(A, rep.u_final)
        assert ratio <= stats(A).kappa * (1 + 1e-12)
