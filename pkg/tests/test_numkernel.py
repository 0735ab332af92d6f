from unittest import TestCase

import numpy as np
import pytest

from hrisim.linalg.numkernel import (
    blkdiag,
    kron,
    lstsq_minnorm,
    numerical_rank,
    unvec,
    vec,
)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestVec(TestCase):
    def test_column_stacking(self):
        mat = np.array([[1, 2], [3, 4]])
        np.testing.assert_array_equal(vec(mat), [1, 3, 2, 4])

    def test_unvec_inverts(self):
        mat = np.arange(12).reshape(3, 4)
        np.testing.assert_array_equal(unvec(vec(mat), 3, 4), mat)

    def test_unvec_wrong_length(self):
        with self.assertRaises(ValueError):
            unvec(np.arange(5), 2, 3)

    def test_vec_needs_matrix(self):
        with self.assertRaises(ValueError):
            vec(np.arange(3))


class TestKron:
    def test_vec_identity(self):
        """ vec(A X B) = (B^T kron A) vec(X) """
        rng = np.random.default_rng(0)
        a, x, b = crandn(rng, 3, 4), crandn(rng, 4, 2), crandn(rng, 2, 5)
        np.testing.assert_allclose(vec(a @ x @ b), kron(b.T, a) @ vec(x), rtol=1e-12)

    def test_dimensions(self):
        assert kron(np.ones((2, 3)), np.ones((4, 5))).shape == (8, 15)


class TestBlkdiag:
    def test_off_blocks_are_zero(self):
        out = blkdiag([2 * np.eye(2), 3 * np.eye(3)])
        assert out.shape == (5, 5)
        assert np.count_nonzero(out[:2, 2:]) == 0
        assert np.count_nonzero(out[2:, :2]) == 0
        np.testing.assert_array_equal(np.diag(out), [2, 2, 3, 3, 3])

    def test_empty(self):
        with pytest.raises(ValueError):
            blkdiag([])


class TestRankAndLstsq(TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(42)

    def test_rank_of_product(self):
        low_rank = crandn(self.rng, 6, 2) @ crandn(self.rng, 2, 5)
        self.assertEqual(numerical_rank(low_rank), 2)

    def test_rank_of_zeros(self):
        self.assertEqual(numerical_rank(np.zeros((3, 4))), 0)

    def test_rank_bad_tolerance(self):
        with self.assertRaises(ValueError):
            numerical_rank(np.eye(2), rel_tol=0)

    def test_overdetermined_exact(self):
        mat = crandn(self.rng, 10, 4)
        x = crandn(self.rng, 4)
        solution, rank = lstsq_minnorm(mat, mat @ x)
        self.assertEqual(rank, 4)
        np.testing.assert_allclose(solution, x, rtol=1e-10)

    def test_rank_deficient_min_norm(self):
        mat = crandn(self.rng, 6, 2) @ crandn(self.rng, 2, 4)
        rhs = crandn(self.rng, 6)
        solution, rank = lstsq_minnorm(mat, rhs)
        self.assertEqual(rank, 2)
        np.testing.assert_allclose(solution, np.linalg.pinv(mat) @ rhs, rtol=1e-8, atol=1e-10)

    def test_matrix_rhs(self):
        mat = crandn(self.rng, 8, 3)
        x = crandn(self.rng, 3, 5)
        solution, _ = lstsq_minnorm(mat, mat @ x)
        np.testing.assert_allclose(solution, x, rtol=1e-10)

    def test_rhs_mismatch(self):
        with self.assertRaises(ValueError):
            lstsq_minnorm(np.eye(3), np.ones(4))


class TestIdentities:
    def setup_method(self):
        self.rng = np.random.default_rng(7)

    def test_mixed_product(self):
        a, b = crandn(self.rng, 2, 3), crandn(self.rng, 3, 2)
        c, d = crandn(self.rng, 3, 2), crandn(self.rng, 2, 4)
        np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), rtol=1e-10)

    def test_gram_of_kron_with_identity(self):
        x = crandn(self.rng, 3, 2)
        big = kron(x, np.eye(4))
        np.testing.assert_allclose(
            big.conj().T @ big, kron(x.conj().T @ x, np.eye(4)), rtol=1e-10, atol=1e-12
        )

    def test_blkdiag_trace(self):
        a, b = crandn(self.rng, 3, 3), crandn(self.rng, 3, 3)
        assert np.trace(blkdiag([a, b])) == pytest.approx(np.trace(a) + np.trace(b))

    def test_scalar_mean(self):
        solution, rank = lstsq_minnorm(np.array([[1.0], [1.0]]), np.array([1.0, 3.0]))
        assert rank == 1
        assert solution[0] == pytest.approx(2.0)

    def test_normal_equations_hold(self):
        mat = crandn(self.rng, 8, 4)
        rhs = crandn(self.rng, 8)
        solution, _ = lstsq_minnorm(mat, rhs)
        residual = mat.conj().T @ (rhs - mat @ solution)
        assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(mat.conj().T @ rhs)
