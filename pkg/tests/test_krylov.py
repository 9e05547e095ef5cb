import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddlepoint.krylov import (BreakdownError, Status, StopCriteria, cg, fgmres, gmres,
                                lsqr, mrs)
from saddlepoint.operators import aslinearoperator, compose
from saddlepoint.sparse import DimensionError

TIGHT = StopCriteria(1e-13, 1000)


def skew(rng, d, scale=1.0):
    R = rng.standard_normal((d, d)) * scale
    return R - R.T


def spd(rng, d):
    R = rng.standard_normal((d, d))
    return R @ R.T + d * np.eye(d)


# gmres / fgmres


def test_gmres_identity_one_step():
    x, st_ = gmres(np.eye(4), np.array([1.0, 2, 3, 4]))
    assert np.allclose(x, [1, 2, 3, 4]) and st_.iterations == 1
    assert st_.status is Status.CONVERGED


def test_gmres_diagonal():
    x, st_ = gmres(np.diag([1.0, 2.0]), np.array([1.0, 2.0]), stop=TIGHT)
    assert st_.iterations <= 2
    assert np.linalg.norm(np.diag([1.0, 2.0]) @ x - [1, 2]) <= 1e-12


def test_zero_rhs_all_solvers():
    b = np.zeros(3)
    for solver in (lambda: gmres(np.eye(3), b), lambda: fgmres(np.eye(3), b, None),
                   lambda: cg(np.eye(3), b), lambda: lsqr(np.eye(3), b),
                   lambda: mrs(np.zeros((3, 3)), b)):
        x, st_ = solver()
        assert np.array_equal(x, b) and st_.iterations == 0 and st_.status is Status.CONVERGED


def test_fgmres_exact_preconditioner():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((12, 12)) + 12 * np.eye(12)
    b = rng.standard_normal(12)
    x, st_ = fgmres(A, b, lambda v: np.linalg.solve(A, v), stop=TIGHT)
    assert st_.iterations == 1
    assert np.allclose(x, np.linalg.solve(A, b))


def test_fgmres_diag_example():
    x, _ = fgmres(np.diag([2.0, 3.0]), np.array([2.0, 3.0]), lambda v: v, stop=TIGHT)
    assert np.allclose(x, [1, 1])


@pytest.mark.parametrize("seed", range(4))
def test_fgmres_identity_matches_gmres(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((20, 20)) + 5 * np.eye(20)
    b = rng.standard_normal(20)
    stop = StopCriteria(1e-10, 60)
    x1, s1 = gmres(A, b, restart=10, stop=stop)
    x2, s2 = fgmres(A, b, lambda v: v.copy(), restart=10, stop=stop)
    assert np.allclose(x1, x2, atol=1e-12)
    assert s1.iterations == s2.iterations


@pytest.mark.parametrize("seed", range(4))
def test_fgmres_constant_preconditioner_is_right_preconditioned_gmres(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((20, 20)) + 6 * np.eye(20)
    M = np.diag(1.0 / np.diag(A)) + 0.01 * rng.standard_normal((20, 20))
    b = rng.standard_normal(20)
    stop = StopCriteria(1e-12, 200)
    x1, _ = fgmres(A, b, lambda v: M @ v, stop=stop)
    u, _ = gmres(compose(A, M), b, stop=stop)
    assert np.allclose(x1, M @ u, atol=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_gmres_history_non_increasing_within_cycles(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((30, 30)) + 3 * np.eye(30)
    b = rng.standard_normal(30)
    _, st_ = gmres(A, b, restart=10, stop=StopCriteria(1e-10, 200))
    h = np.array(st_.residual_history)
    # cycle interior estimates are monotone; boundaries hold the recomputed true residual
    for start in range(0, len(h) - 1, 10):
        seg = h[start:start + 11]
        assert np.all(np.diff(seg[:-1]) <= 1e-12), seg
    ends = h[::10]
    assert np.all(np.diff(ends) <= 1e-10)


def test_gmres_max_iterations():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((40, 40))
    _, st_ = gmres(A, rng.standard_normal(40), restart=5, stop=StopCriteria(1e-14, 7))
    assert st_.status is Status.MAX_ITERATIONS and st_.iterations == 7


def test_dimension_checks():
    with pytest.raises(DimensionError):
        gmres(np.eye(3), np.ones(2))
    with pytest.raises(DimensionError):
        cg(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        StopCriteria(0.0, 10)


# cg


def test_cg_examples():
    x, st_ = cg(np.eye(2), np.array([4.0, 5.0]))
    assert np.allclose(x, [4, 5]) and st_.iterations == 1
    x, st_ = cg(np.array([[2.0, 1], [1, 2]]), np.array([1.0, 1.0]), TIGHT)
    assert np.allclose(x, [1 / 3, 1 / 3]) and st_.iterations <= 2


def test_cg_breakdown_on_indefinite():
    with pytest.raises(BreakdownError):
        cg(np.array([[1.0, 2], [2, 1]]), np.array([1.0, -1.0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10_000))
def test_cg_finite_termination(d, seed):
    rng = np.random.default_rng(seed)
    A = spd(rng, d)
    b = rng.standard_normal(d)
    x, st_ = cg(A, b, StopCriteria(1e-14, 10 * d))
    assert st_.iterations <= d + 5
    assert np.allclose(x, np.linalg.solve(A, b), rtol=1e-8, atol=1e-10)


# lsqr


def test_lsqr_examples():
    y, _ = lsqr(np.array([[1.0], [1.0]]), np.array([1.0, 2.0]), TIGHT)
    assert np.allclose(y, [1.5])
    x, _ = lsqr(np.array([[1.0, 1.0]]), np.array([2.0]), TIGHT)
    assert np.allclose(x, [1, 1])
    x, st_ = lsqr(np.eye(1), np.array([3.0]), TIGHT)
    assert np.allclose(x, [3]) and st_.iterations == 1


@pytest.mark.parametrize("shape", [(30, 10), (10, 30), (25, 25)])
def test_lsqr_matches_pseudoinverse(shape):
    rng = np.random.default_rng(sum(shape))
    A = rng.standard_normal(shape)
    b = rng.standard_normal(shape[0])
    x, _ = lsqr(A, b, TIGHT)
    assert np.allclose(x, np.linalg.pinv(A) @ b, rtol=1e-8, atol=1e-9)


def test_lsqr_accepts_sparse_operator():
    from saddlepoint.sparse import SparseMatrix
    B = SparseMatrix.from_dense([[1.0, 0], [0, 2], [1, 1]])
    b = np.array([1.0, 2.0, 3.0])
    x, _ = lsqr(aslinearoperator(B), b, TIGHT)
    assert np.allclose(x, np.linalg.lstsq(B.to_dense(), b, rcond=None)[0])


# mrs


def test_mrs_zero_skew():
    x, st_ = mrs(np.zeros((3, 3)), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(x, [1, 2, 3]) and st_.iterations == 1


def test_mrs_rotation():
    x, _ = mrs(np.array([[0.0, 1], [-1, 0]]), np.array([1.0, 0.0]), TIGHT)
    assert np.allclose(x, [0.5, 0.5])


@pytest.mark.parametrize("seed", range(6))
def test_mrs_agrees_with_gmres_and_dense(seed):
    rng = np.random.default_rng(seed)
    J = skew(rng, 20)
    b = rng.standard_normal(20)
    x, st_ = mrs(J, b, StopCriteria(1e-12, 500))
    dense = np.linalg.solve(np.eye(20) + J, b)
    xg, _ = gmres(np.eye(20) + J, b, restart=20, stop=StopCriteria(1e-12, 500))
    assert np.allclose(x, dense, rtol=1e-8, atol=1e-8)
    assert np.allclose(x, xg, rtol=1e-8, atol=1e-8)
    assert np.all(np.diff(st_.residual_history) <= 1e-15)


def test_mrs_max_iterations_flagged():
    rng = np.random.default_rng(3)
    J = skew(rng, 60, scale=10)
    _, st_ = mrs(J, rng.standard_normal(60), StopCriteria(1e-14, 3))
    assert st_.status is Status.MAX_ITERATIONS and st_.iterations == 3
