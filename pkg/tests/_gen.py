"""Seeded problem generators shared by the unit and acceptance tests."""
import numpy as np

from saddlepoint import SaddleProblem, SparseMatrix


def sprand(rng, nrows, ncols, density, scale=1.0):
    mask = rng.random((nrows, ncols)) < density
    vals = rng.standard_normal((nrows, ncols)) * scale
    return np.where(mask, vals, 0.0)


def full_rank_B(rng, n, m, density=0.15):
    """Sparse n x m with a guaranteed full-rank diagonal part, rows shuffled."""
    dense = sprand(rng, n, m, density)
    dense[:m, :m] += np.diag(1.0 + rng.random(m))
    return dense[rng.permutation(n)]


def spd(rng, d, density=0.2):
    R = sprand(rng, d, d, density)
    return R @ R.T + d * 0.1 * np.eye(d) + np.diag(rng.random(d))


def skew(rng, d, density=0.2, scale=1.0):
    R = sprand(rng, d, d, density, scale)
    return R - R.T


def saddle_problem(rng, n, m, case):
    """A nonsingular problem of the requested case whose projected symmetric part is PD.

    General instances perturb C away from B on B's pattern so that both
    nullspace bases pivot alike.
    """
    A = spd(rng, n)
    if case != "symmetric":
        A = A + skew(rng, n, scale=0.5)
    B = full_rank_B(rng, n, m)
    C = B
    if case == "general":
        C = B + 1e-3 * np.where(B != 0, rng.standard_normal(B.shape), 0.0)
    A_s = SparseMatrix.from_dense(A)
    B_s = SparseMatrix.from_dense(B)
    C_s = SparseMatrix.from_dense(C)
    f = rng.standard_normal(n)
    g = rng.standard_normal(m)
    return SaddleProblem.from_blocks(A_s, B_s, C_s, f, g, name=f"{case}_{n}_{m}")


def dense_solve(problem):
    K = problem.to_dense()
    sol = np.linalg.solve(K, problem.rhs)
    return sol[:problem.n], sol[problem.n:]
