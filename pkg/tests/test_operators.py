import numpy as np
import pytest

from saddlepoint.operators import (LinearOperator, aslinearoperator, compose, identity,
                                   materialize, op_sum, scaled, transposed)
from saddlepoint.sparse import DimensionError, SparseMatrix, symmetric_split


def rand_sparse(rng, r, c, density=0.4):
    d = np.where(rng.random((r, c)) < density, rng.standard_normal((r, c)), 0.0)
    return SparseMatrix.from_dense(d), d


def test_apply_checks_length():
    op = aslinearoperator(SparseMatrix.identity(3))
    with pytest.raises(DimensionError):
        op.apply(np.ones(4))
    assert op.apply(np.ones(3)).shape == (3,)


def test_missing_transpose():
    op = LinearOperator(2, 2, lambda x: x)
    assert not op.has_transpose
    with pytest.raises(NotImplementedError):
        op.apply_transpose(np.ones(2))


def test_triple_product_first_column():
    rng = np.random.default_rng(0)
    Z, Zd = rand_sparse(rng, 8, 3)
    A, Ad = rand_sparse(rng, 8, 8)
    op = compose(Z.T, A, Z)
    assert np.allclose(op.apply(np.eye(3)[0]), (Zd.T @ Ad @ Zd)[:, 0], atol=1e-13)
    assert op.shape == (3, 3)


def test_identity_shift():
    rng = np.random.default_rng(1)
    J, Jd = rand_sparse(rng, 5, 5)
    x = rng.standard_normal(5)
    assert np.allclose(op_sum(1.0, J).apply(x), x + Jd @ x, atol=1e-14)


def test_symmetric_part_composition():
    rng = np.random.default_rng(2)
    A, _ = rand_sparse(rng, 9, 9)
    As, _ = symmetric_split(A)
    x = rng.standard_normal(9)
    assert np.allclose(aslinearoperator(As).apply(x), 0.5 * (A.matvec(x) + A.rmatvec(x)), atol=1e-14)


def test_operator_algebra_matches_dense():
    rng = np.random.default_rng(3)
    A, Ad = rand_sparse(rng, 6, 6)
    B, Bd = rand_sparse(rng, 6, 6)
    ops = {
        "sum": (aslinearoperator(A) + B, Ad + Bd),
        "diff": (aslinearoperator(A) - B, Ad - Bd),
        "scaled": (scaled(2.5, A), 2.5 * Ad),
        "neg": (-aslinearoperator(A), -Ad),
        "chain": (aslinearoperator(A) @ B, Ad @ Bd),
        "transposed": (transposed(A), Ad.T),
        "shifted": (op_sum(A, 3.0), Ad + 3 * np.eye(6)),
        "scalar chain": (compose(2.0, A, B, 0.5), Ad @ Bd),
    }
    for name, (op, dense) in ops.items():
        assert np.allclose(materialize(op), dense, atol=1e-13), name
        assert np.allclose(materialize(op.T), dense.T, atol=1e-13), name


def test_materialize_round_trip():
    rng = np.random.default_rng(4)
    Z, _ = rand_sparse(rng, 10, 4)
    A, _ = rand_sparse(rng, 10, 10)
    op = compose(Z.T, op_sum(A, transposed(A)), Z)
    mat = materialize(op)
    wrapped = aslinearoperator(mat)
    for _ in range(100):
        x = rng.standard_normal(4)
        ref = op.apply(x)
        assert np.linalg.norm(wrapped.apply(x) - ref) <= 1e-12 * max(1.0, np.linalg.norm(ref))


def test_compose_rejects_mismatch():
    with pytest.raises(DimensionError):
        compose(SparseMatrix.identity(3), SparseMatrix.identity(2))


def test_identity_descriptor():
    op = identity(4)
    assert np.array_equal(op.apply(np.arange(4.0)), np.arange(4.0))
    assert isinstance(repr(op), str)
