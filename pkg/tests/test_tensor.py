"""Kernel operations: contraction, outer product, reshape, one-hots."""

import numpy as np
import pytest

from ttshap.errors import AxisRangeError, ShapeMismatchError, ValidationError
from ttshap.tensor import DenseTensor, contract, contract_naive, one_hot, outer, reshape


def t(shape, values):
    return DenseTensor(shape, values)


class TestDenseTensor:
    def test_row_major_flat_values(self):
        a = t([2, 3], [1, 2, 3, 4, 5, 6])
        assert a.array[1, 0] == 4
        assert a.values == [1, 2, 3, 4, 5, 6]

    def test_order_zero_scalar(self):
        s = DenseTensor.scalar(2.5)
        assert s.shape == ()
        assert s.item() == 2.5

    def test_rejects_wrong_value_count(self):
        with pytest.raises(ShapeMismatchError):
            t([2, 2], [1, 2, 3])

    def test_rejects_nonpositive_dims(self):
        with pytest.raises(ValidationError):
            t([2, 0], [])

    def test_immutable(self):
        a = t([2], [1, 2])
        with pytest.raises(ValueError):
            a.array[0] = 5


class TestContract:
    def test_identity_times_vector(self):
        eye = t([2, 2], [1, 0, 0, 1])
        v = t([2], [3, 5])
        out = contract(eye, v, {(2, 1)})
        np.testing.assert_allclose(out.array, [3, 5])

    def test_matrix_product_by_hand(self):
        a = t([2, 2], [1, 2, 3, 4])
        b = t([2, 2], [5, 6, 7, 8])
        out = contract(a, b, {(2, 1)})
        np.testing.assert_allclose(out.array, [[19, 22], [43, 50]])

    def test_order3_against_triple_loop(self):
        # a_{ijk} = i + j + k (1-based); contracting the last axis with the
        # ones vector gives m_{ij} = 2i + 2j + 3, rederived here by loops.
        a = np.empty((2, 2, 2))
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    a[i, j, k] = (i + 1) + (j + 1) + (k + 1)
        ones = t([2], [1, 1])
        out = contract(DenseTensor.from_array(a), ones, {(3, 1)})
        expected = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                expected[i, j] = sum(a[i, j, k] for k in range(2))
        np.testing.assert_allclose(out.array, expected)
        np.testing.assert_allclose(out.array, [[2 * 1 + 2 * 1 + 3, 2 * 1 + 2 * 2 + 3],
                                               [2 * 2 + 2 * 1 + 3, 2 * 2 + 2 * 2 + 3]])

    def test_dimension_mismatch_names_pair(self):
        a = t([2, 3], [0] * 6)
        b = t([2, 2], [0] * 4)
        with pytest.raises(ShapeMismatchError, match=r"\(2,1\)"):
            contract(a, b, {(2, 1)})

    def test_axis_out_of_range(self):
        a = t([2], [1, 2])
        with pytest.raises(AxisRangeError):
            contract(a, a, {(3, 1)})

    def test_repeated_axis_rejected(self):
        a = t([2, 2], [1, 0, 0, 1])
        with pytest.raises(ValidationError):
            contract(a, a, [(1, 1), (1, 2)])

    def test_pair_order_irrelevant(self):
        rng = np.random.default_rng(0)
        a = DenseTensor.from_array(rng.normal(size=(2, 3, 4)))
        b = DenseTensor.from_array(rng.normal(size=(3, 4, 5)))
        first = contract(a, b, [(2, 1), (3, 2)])
        second = contract(a, b, [(3, 2), (2, 1)])
        np.testing.assert_array_equal(first.array, second.array)

    def test_bilinear(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a1 = rng.normal(size=(3, 2))
            a2 = rng.normal(size=(3, 2))
            b = rng.normal(size=(2, 4))
            alpha, beta = rng.normal(size=2)
            lhs = contract(DenseTensor.from_array(alpha * a1 + beta * a2),
                           DenseTensor.from_array(b), {(2, 1)}).array
            rhs = alpha * contract(DenseTensor.from_array(a1), DenseTensor.from_array(b),
                                   {(2, 1)}).array \
                + beta * contract(DenseTensor.from_array(a2), DenseTensor.from_array(b),
                                  {(2, 1)}).array
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_commutes_with_mirrored_pairs_up_to_permutation(self):
        rng = np.random.default_rng(2)
        a = DenseTensor.from_array(rng.normal(size=(2, 3)))
        b = DenseTensor.from_array(rng.normal(size=(3, 4)))
        ab = contract(a, b, {(2, 1)}).array  # axes (a1, b2)
        ba = contract(b, a, {(1, 2)}).array  # axes (b2, a1)
        np.testing.assert_allclose(ab, ba.T, atol=1e-15)

    def test_matches_textbook_matmul_on_random_matrices(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m, k, n = rng.integers(1, 6, size=3)
            a = rng.normal(size=(m, k))
            b = rng.normal(size=(k, n))
            out = contract(DenseTensor.from_array(a), DenseTensor.from_array(b), {(2, 1)})
            np.testing.assert_allclose(out.array, a @ b, atol=1e-12)

    def test_fast_path_matches_naive_loops(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            a = DenseTensor.from_array(rng.normal(size=(2, 3, 2)))
            b = DenseTensor.from_array(rng.normal(size=(3, 2, 2)))
            pairs = {(2, 1), (3, 2)}
            np.testing.assert_allclose(
                contract(a, b, pairs).array, contract_naive(a, b, pairs).array, atol=1e-12
            )

    def test_full_contraction_to_scalar(self):
        a = t([2], [1, 2])
        b = t([2], [3, 4])
        out = contract(a, b, {(1, 1)})
        assert out.shape == ()
        assert out.item() == 11


class TestOuter:
    def test_scalar_scaling(self):
        out = outer(DenseTensor.scalar(2), t([2], [1, 3]))
        np.testing.assert_allclose(out.array, [2, 6])

    def test_one_hot_outer(self):
        out = outer(t([2], [1, 0]), t([2], [0, 1]))
        np.testing.assert_allclose(out.array, [[0, 1], [0, 0]])

    def test_double_loop(self):
        a, b = [1, 2], [3, 4]
        out = outer(t([2], a), t([2], b))
        expected = [[ai * bj for bj in b] for ai in a]
        np.testing.assert_allclose(out.array, expected)
        np.testing.assert_allclose(out.array, [[3, 4], [6, 8]])


class TestReshape:
    def test_flatten(self):
        a = t([2, 3], [1, 2, 3, 4, 5, 6])
        out = reshape(a, [2])
        assert out.shape == (6,)
        assert out.values == a.values

    def test_noop_grouping(self):
        a = t([4, 1], list(range(4)))
        out = reshape(a, [1, 1])
        assert out.shape == (4, 1)
        assert out.values == a.values

    def test_index_bijection(self):
        a = t([2, 2, 2], [1, 2, 3, 4, 5, 6, 7, 8])
        out = reshape(a, [2, 1])
        np.testing.assert_allclose(out.array, [[1, 2], [3, 4], [5, 6], [7, 8]])

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(5)
        a = DenseTensor.from_array(rng.normal(size=(2, 3, 4)))
        merged = reshape(a, [2, 1])
        back = DenseTensor.from_array(merged.array.reshape(2, 3, 4))
        np.testing.assert_array_equal(back.array, a.array)
        assert back.values == a.values

    def test_group_sum_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            reshape(t([2, 2], [0] * 4), [3])


class TestOneHot:
    @pytest.mark.parametrize(
        "i,n,expected",
        [(1, 1, [1.0]), (2, 3, [0, 1, 0]), (4, 4, [0, 0, 0, 1])],
    )
    def test_examples(self, i, n, expected):
        np.testing.assert_array_equal(one_hot(i, n).array, expected)

    def test_out_of_range(self):
        with pytest.raises(AxisRangeError):
            one_hot(0, 3)
        with pytest.raises(AxisRangeError):
            one_hot(4, 3)
