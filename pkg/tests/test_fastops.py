import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amplab.fastops import (DCTFactor, DenseFactor, DenseOperator, DiagonalFactor, DimensionError,
                            HadamardFactor, ImplicitOperator, RowMask, ScaleFactor, SignedPermutation,
                            apply_operator, dct2_matrix, fwht_normalized, hadamard_matrix, identity_operator,
                            is_power_of_two, materialize_dense, transpose_factor)


def test_base_butterfly():
    assert np.allclose(fwht_normalized([1.0, 0.0]), [2 ** -0.5, 2 ** -0.5], atol=0, rtol=1e-15)


def test_involution_at_1024(rng):
    x = rng.standard_normal(1024)
    assert np.max(np.abs(fwht_normalized(fwht_normalized(x)) - x)) <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 4, 64, 256, 1024])
def test_matches_dense_oracle(n, rng):
    # the dense Sylvester matrix is built by block recursion, independently of the butterflies
    x = rng.standard_normal(n)
    assert np.max(np.abs(fwht_normalized(x) - hadamard_matrix(n) @ x)) <= 1e-12


@given(st.integers(0, 10), st.integers(0, 2 ** 32 - 1))
def test_norm_preserved(k, seed):
    x = np.random.default_rng(seed).standard_normal(2 ** k)
    assert abs(np.linalg.norm(fwht_normalized(x)) - np.linalg.norm(x)) <= 1e-12 * max(1.0, np.linalg.norm(x))


def test_block_of_columns(rng):
    X = rng.standard_normal((128, 5))
    Y = fwht_normalized(X)
    for j in range(5):
        assert np.allclose(Y[:, j], fwht_normalized(X[:, j]), rtol=0, atol=1e-14)


@pytest.mark.parametrize("n", [3, 6, 1000])
def test_non_power_of_two_rejected(n):
    with pytest.raises(DimensionError):
        fwht_normalized(np.ones(n))


def test_input_not_modified(rng):
    x = rng.standard_normal(16)
    keep = x.copy()
    fwht_normalized(x)
    assert np.array_equal(x, keep)


@pytest.mark.parametrize("n,expected", [(1, True), (2, True), (6, False), (1024, True), (0, False)])
def test_is_power_of_two(n, expected):
    assert is_power_of_two(n) is expected


def test_runtime_scaling_is_n_log_n():
    def best(n, reps=3):
        x = np.random.default_rng(0).standard_normal(n)
        out = []
        for _ in range(reps):
            t0 = time.perf_counter()
            fwht_normalized(x)
            out.append(time.perf_counter() - t0)
        return min(out)

    small, large = best(2 ** 16, 7), best(2 ** 20)
    ideal = (2 ** 20 * 20) / (2 ** 16 * 16)
    assert large / small <= 1.5 * ideal


# ---------------------------------------------------------------- operators


def test_identity_operator_leaves_vectors_unchanged(rng):
    v = rng.standard_normal(7)
    assert np.array_equal(apply_operator(identity_operator(7), v), v)
    assert np.array_equal(materialize_dense(identity_operator(3)), np.eye(3))


def test_dense_operator_matches_materialized_multiply(rng):
    A = rng.standard_normal((8, 8))
    op = DenseOperator(A)
    v = rng.standard_normal(8)
    assert np.max(np.abs(apply_operator(op, v) - materialize_dense(op) @ v)) <= 1e-12
    assert np.max(np.abs(apply_operator(op, v, transpose=True) - A.T @ v)) <= 1e-12


def test_dense_operator_does_not_freeze_caller_array():
    A = np.zeros((2, 2))
    op = DenseOperator(A)
    A[0, 0] = 1.0
    assert not op.A.flags.writeable


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_operator(DenseOperator(np.ones((3, 4))), np.ones(3))
    with pytest.raises(DimensionError):
        apply_operator(DenseOperator(np.ones((3, 4))), np.ones(4), transpose=True)


def _random_factors(rng, m, n):
    return [SignedPermutation.random(m, rng), HadamardFactor(m), DiagonalFactor(rng.standard_normal(min(m, n)), m, n),
            transpose_factor(DCTFactor(n)), SignedPermutation.random(n, rng)]


def test_factor_product_oracle(rng):
    m, n = 16, 12
    fs = _random_factors(rng, m, n)
    op = ImplicitOperator(fs)
    expected = np.eye(n)
    for f in reversed(fs):
        expected = f.dense() @ expected
    assert np.max(np.abs(materialize_dense(op) - expected)) <= 1e-12


def test_adjoint_identity_on_probes(rng):
    op = ImplicitOperator(_random_factors(rng, 32, 20))
    for _ in range(10):
        u, v = rng.standard_normal(32), rng.standard_normal(20)
        lhs = u @ apply_operator(op, v)
        rhs = apply_operator(op, u, transpose=True) @ v
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_factor_list_then_transposes_is_identity(rng):
    n = 64
    fs = [SignedPermutation.random(n, rng), HadamardFactor(n), SignedPermutation.random(n, rng), DCTFactor(n)]
    op = ImplicitOperator(fs)
    v = rng.standard_normal(n)
    assert np.max(np.abs(apply_operator(op, apply_operator(op, v), transpose=True) - v)) <= 1e-10


@pytest.mark.parametrize("factor", ["hadamard", "dct", "signed_perm"])
def test_orthogonality_probes(factor, rng):
    n = 256
    f = {"hadamard": HadamardFactor(n), "dct": DCTFactor(n), "signed_perm": SignedPermutation.random(n, rng)}[factor]
    op = ImplicitOperator([f])
    for _ in range(20):
        v = rng.standard_normal(n)
        ratio = np.linalg.norm(apply_operator(op, v)) / np.linalg.norm(v)
        assert abs(ratio - 1.0) <= 1e-10


def test_symmetric_invariant_materializes_symmetric(rng):
    n = 64
    Pv, Pe = SignedPermutation.random(n, rng), SignedPermutation.random(n, rng)
    H = HadamardFactor(n)
    D = DiagonalFactor(rng.standard_normal(n), n, n)
    op = ImplicitOperator([Pv, H, Pe, D, Pe.inverse(), transpose_factor(H), Pv.inverse()], symmetric=True)
    A = materialize_dense(op)
    assert np.max(np.abs(A - A.T)) <= 1e-10


def test_signed_permutation_inverse_and_orthogonality(rng):
    P = SignedPermutation.random(10, rng)
    v = rng.standard_normal(10)
    assert np.array_equal(P.inverse().apply(P.apply(v)), v)
    M = P.matrix()
    assert np.array_equal(M @ M.T, np.eye(10))


def test_row_mask_transpose_is_zero_padding(rng):
    mask = RowMask(np.array([0, 3, 5]), 6)
    v = rng.standard_normal(6)
    assert np.array_equal(mask.apply(v), v[[0, 3, 5]])
    padded = mask.apply_t(np.array([1.0, 2.0, 3.0]))
    assert np.array_equal(padded, [1.0, 0, 0, 2.0, 0, 3.0])


def test_dct_matches_dense(rng):
    n = 10
    v = rng.standard_normal(n)
    assert np.max(np.abs(DCTFactor(n).apply(v) - dct2_matrix(n) @ v)) <= 1e-12
    assert np.max(np.abs(DCTFactor(n).apply_t(v) - dct2_matrix(n).T @ v)) <= 1e-12


def test_scale_and_dense_factors(rng):
    A = rng.standard_normal((4, 3))
    op = ImplicitOperator([ScaleFactor(2.0, 4), DenseFactor(A)])
    assert np.allclose(materialize_dense(op), 2.0 * A, rtol=0, atol=1e-14)


def test_materialize_cap():
    with pytest.raises(MemoryError):
        materialize_dense(identity_operator(100), cap=99)


def test_chain_mismatch_rejected():
    with pytest.raises(DimensionError):
        ImplicitOperator([HadamardFactor(4), HadamardFactor(8)])
