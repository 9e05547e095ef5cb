import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import spd
from saddlepoint.fsai import NotPositiveDefiniteError, apply_split_preconditioned, fsai
from saddlepoint.operators import aslinearoperator, materialize
from saddlepoint.sparse import SparseMatrix


def test_identity():
    assert np.array_equal(fsai(np.eye(3)).W.to_dense(), np.eye(3))


def test_diagonal():
    W = fsai(np.diag([4.0, 9.0])).W.to_dense()
    assert np.allclose(W, np.diag([0.5, 1 / 3]))


def test_two_by_two_by_hand():
    Ns = np.array([[2.0, 1.0], [1.0, 2.0]])
    fac = fsai(Ns)
    W = fac.W.to_dense()
    assert np.allclose(W, [[1 / np.sqrt(2), -1 / np.sqrt(6)], [0, 2 / np.sqrt(6)]])
    assert np.allclose(W.T @ Ns @ W, np.eye(2))
    assert np.allclose(fac.diag_values, [2.0, 1.5])


def test_indefinite_detected_at_second_step():
    with pytest.raises(NotPositiveDefiniteError) as info:
        fsai(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert info.value.step == 1          # zero-based: the second pivot
    assert info.value.pivot == pytest.approx(-3.0)


def test_zero_pivot():
    with pytest.raises(NotPositiveDefiniteError):
        fsai(np.zeros((2, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 100), st.integers(0, 10_000))
def test_exact_mode_is_inverse_cholesky(d, seed):
    N = spd(np.random.default_rng(seed), d)
    fac = fsai(N)
    W = fac.W.to_dense()
    assert np.allclose(np.tril(W, -1), 0)
    assert np.all(fac.diag_values > 0)
    assert np.linalg.norm(W.T @ N @ W - np.eye(d)) <= 1e-8
    R = np.linalg.cholesky(N).T           # N = R^T R, R upper
    assert np.allclose(W, np.linalg.inv(R), atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_upper_triangular_with_dropping_and_sparser(seed):
    N = spd(np.random.default_rng(seed), 40, density=0.05)
    exact = fsai(N)
    approx = fsai(N, rho=1e-3, tau=1e-3)
    assert np.allclose(np.tril(approx.W.to_dense(), -1), 0)
    assert approx.nnz <= exact.nnz


def test_works_through_implicit_operator():
    rng = np.random.default_rng(2)
    Z = SparseMatrix.from_dense(np.where(rng.random((20, 6)) < 0.5, 1.0, 0) + np.eye(20, 6))
    A = SparseMatrix.from_dense(spd(rng, 20))
    from saddlepoint.operators import compose
    Ns = compose(Z.T, A, Z)
    fac = fsai(Ns, 6)
    W = fac.W.to_dense()
    dense = Z.to_dense().T @ A.to_dense() @ Z.to_dense()
    assert np.allclose(W.T @ dense @ W, np.eye(6), atol=1e-10)


def test_split_preconditioned_examples():
    N = np.diag([4.0, 9.0])
    fac = fsai(N)
    assert np.allclose(materialize(apply_split_preconditioned(N, fac)), np.eye(2))
    eye = SparseMatrix.identity(3)
    rng = np.random.default_rng(0)
    inner = rng.standard_normal((3, 3))
    op = apply_split_preconditioned(inner, eye)
    x = rng.standard_normal(3)
    assert np.allclose(op.apply(x), inner @ x)


@pytest.mark.parametrize("seed", range(3))
def test_split_preconditioned_near_identity(seed):
    rng = np.random.default_rng(seed)
    N = spd(rng, 50)
    op = apply_split_preconditioned(aslinearoperator(N), fsai(N))
    for _ in range(10):
        x = rng.standard_normal(50)
        assert np.linalg.norm(op.apply(x) - x) <= 1e-6 * np.linalg.norm(x)
