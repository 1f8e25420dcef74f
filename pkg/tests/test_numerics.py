import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sketchfactor.numerics import (
    DesignMatrix,
    DimensionError,
    DiscreteSparseCode,
    FactorPair,
    KMeansAssignment,
    NumericError,
    SparseCode,
    frob_cost,
    least_squares,
    one_hot,
    pinv,
    read_design_matrix,
    write_design_matrix,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def residual_double_loop(A, X, D):
    total = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            v = sum(X[i, l] * D[l, j] for l in range(X.shape[1])) - A[i, j]
            total += v * v
    return total


def test_frob_cost_two_rows_one_center():
    assert frob_cost([[0.0], [2.0]], [[1.0], [1.0]], [[1.0]]) == 2.0


def test_frob_cost_identity_factor_is_zero():
    A = np.random.default_rng(0).normal(size=(4, 3))
    assert frob_cost(A, np.eye(4), A) == 0.0


def test_frob_cost_matches_double_loop():
    rng = np.random.default_rng(1)
    A, X, D = rng.normal(size=(4, 2)), rng.normal(size=(4, 2)), rng.normal(size=(2, 2))
    ref = residual_double_loop(A, X, D)
    assert abs(frob_cost(A, X, D) - ref) <= 1e-12 * ref


def test_frob_cost_shape_mismatch():
    with pytest.raises(DimensionError):
        frob_cost(np.zeros((3, 2)), np.zeros((3, 2)), np.zeros((3, 2)))


@given(arrays(np.float64, (5, 3), elements=finite), arrays(np.float64, (5, 2), elements=finite),
       arrays(np.float64, (2, 3), elements=finite))
def test_frob_cost_nonnegative_and_zero_only_on_exact_fit(A, X, D):
    c = frob_cost(A, X, D)
    assert c >= 0
    assert (c <= 1e-12) == bool(np.all(np.abs(X @ D - A) <= 1e-6)) or c <= 1e-10
    assert frob_cost(X @ D, X, D) == 0.0


@given(arrays(np.float64, (6, 3), elements=finite), st.permutations(range(6)))
def test_frob_cost_row_permutation_invariance(A, perm):
    rng = np.random.default_rng(0)
    X, D = rng.normal(size=(6, 2)), rng.normal(size=(2, 3))
    p = list(perm)
    assert np.isclose(frob_cost(A, X, D), frob_cost(A[p], X[p], D), rtol=1e-12, atol=1e-12)


def test_least_squares_identity():
    B = np.array([[1.0, -2.0], [3.0, 0.5]])
    np.testing.assert_allclose(least_squares(np.eye(2), B), B)


def test_least_squares_mean():
    np.testing.assert_allclose(least_squares([[1.0], [1.0]], [[0.0], [2.0]]), [[1.0]])


def test_least_squares_normal_equations():
    rng = np.random.default_rng(2)
    M, B = rng.normal(size=(5, 2)), rng.normal(size=(5, 3))
    Z = least_squares(M, B)
    assert np.max(np.abs(M.T @ (M @ Z - B))) <= 1e-8


def test_least_squares_rejects_nan():
    with pytest.raises(NumericError):
        least_squares([[1.0], [np.nan]], [[0.0], [1.0]])


def test_least_squares_minimizes_cost_over_perturbations():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(10, 4))
    X = one_hot(np.arange(10) % 3, 3)
    D = least_squares(X, A)
    best = frob_cost(A, X, D)
    for _ in range(100):
        assert frob_cost(A, X, D + 0.1 * rng.normal(size=D.shape)) >= best


def test_pinv_diagonal():
    np.testing.assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_orthonormal_columns_is_transpose():
    Q, _ = np.linalg.qr(np.random.default_rng(4).normal(size=(5, 3)))
    np.testing.assert_allclose(pinv(Q), Q.T, atol=1e-12)


def test_pinv_penrose_identities_rank_deficient():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(4, 2)) @ rng.normal(size=(2, 3))
    P = pinv(M)
    scale = np.linalg.norm(M)
    assert np.linalg.norm(M @ P @ M - M) <= 1e-7 * scale
    assert np.linalg.norm(P @ M @ P - P) <= 1e-7 * np.linalg.norm(P)
    assert np.linalg.norm((M @ P).T - M @ P) <= 1e-7
    assert np.linalg.norm((P @ M).T - P @ M) <= 1e-7


@settings(max_examples=50)
@given(arrays(np.float64, (4, 3), elements=finite))
def test_pinv_reproduces_matrix(M):
    if not M.any():
        assert not pinv(M).any()
        return
    scale = np.abs(M).max()
    Ms = M / scale
    assert np.abs(M @ pinv(M) @ M - M).max() / scale <= 1e-7 * max(1.0, np.linalg.norm(Ms))


def test_design_matrix_validation():
    with pytest.raises(NumericError):
        DesignMatrix(np.array([[1.0, np.inf]]))
    with pytest.raises(DimensionError):
        DesignMatrix(np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        DesignMatrix(np.zeros(3))
    A = DesignMatrix([[1, 2], [3, 4]])
    assert (A.n, A.d) == (2, 2)
    with pytest.raises(ValueError):
        A.entries[0, 0] = 5.0


def test_design_matrix_file_round_trip(tmp_path):
    A = np.random.default_rng(6).normal(size=(3, 4))
    path = tmp_path / "a.txt"
    write_design_matrix(A, path)
    assert path.read_text().splitlines()[0] == "3 4"
    np.testing.assert_array_equal(np.asarray(read_design_matrix(path)), A)


def test_design_matrix_file_bad_header(tmp_path):
    path = tmp_path / "a.txt"
    path.write_text("3\n1 2 3\n")
    with pytest.raises(ValueError):
        read_design_matrix(path)
    path.write_text("2 2\n1 2\n")
    with pytest.raises(ValueError):
        read_design_matrix(path)


def test_constraints():
    assert KMeansAssignment().check(one_hot([0, 2, 1], 3))
    assert not KMeansAssignment().check(np.array([[1.0, 1.0]]))
    assert SparseCode(1).check(np.array([[0.0, 2.5], [0.3, 0.0]]))
    assert not SparseCode(1).check(np.array([[1.0, 2.0]]))
    assert DiscreteSparseCode(1, 2).check(np.array([[0.0, -2.0]]))
    assert not DiscreteSparseCode(1, 2).check(np.array([[0.0, 3.0]]))
    assert not DiscreteSparseCode(1, 2).check(np.array([[0.0, 0.5]]))


def test_factor_pair_build_cost():
    rng = np.random.default_rng(7)
    A, D = rng.normal(size=(5, 2)), rng.normal(size=(2, 2))
    X = one_hot([0, 1, 1, 0, 1], 2)
    pair = FactorPair.build(A, X, D, KMeansAssignment(), note="x")
    assert abs(pair.cost - residual_double_loop(A, X, D)) <= 1e-9 * pair.cost
    assert pair.satisfies_constraint()
    np.testing.assert_array_equal(pair.labels, [0, 1, 1, 0, 1])
    assert pair.info == {"note": "x"}
