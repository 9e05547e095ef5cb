"""Sparse approximate nullspace bases.

``saroc`` conjugates the identity columns against the columns of ``B`` with
pivoting, a coefficient threshold and a relative drop tolerance; the columns
that are left over span (approximately) the nullspace of ``B^T``.
``mgs_m_orth`` optionally M-orthonormalizes such a basis.
"""
from dataclasses import dataclass

import numpy as np

from .operators import aslinearoperator
from .sparse import DimensionError, SparseMatrix, SparseVector, axpy_drop, drop_small


class NonPositiveNormError(ArithmeticError):
    """A basis column has non-positive M-norm (``z^T M z <= 0``)."""

    def __init__(self, column, value):
        super().__init__(f"column {column} has z^T M z = {value:.3e} <= 0")
        self.column = column
        self.value = value


@dataclass(frozen=True)
class NullspaceBasis:
    """Result of ``saroc``.

    ``permutation[j]`` is the identity column that column ``j`` of the full
    conjugated matrix ``V`` started from; ``leading`` holds the first
    ``effective_rank`` columns of ``V`` (kept only for diagnostics).
    """

    Z: SparseMatrix
    effective_rank: int
    permutation: np.ndarray
    leading: SparseMatrix
    dependent_columns: tuple = ()

    @property
    def nnz(self):
        return self.Z.nnz

    @property
    def dim(self):
        return self.Z.ncols


@dataclass(frozen=True)
class OrthoParams:
    window: int = 5
    drop_tol: float = 1e-3

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.drop_tol < 0:
            raise ValueError("drop_tol must be non-negative")


def saroc(B: SparseMatrix, rho: float = 0.0, tau: float = 0.0,
          rank_tol: float = 1e-12) -> NullspaceBasis:
    """Sparse approximate right oblique conjugation.

    For each column ``b_i`` the coefficients ``sigma_l = b_i^T v_l`` over the
    not-yet-used columns are recomputed, the largest one (lowest index on
    ties) becomes the pivot, and every later column with
    ``|sigma_l / sigma_pivot| > rho`` is updated by ``axpy_drop``.

    A column of ``B`` whose largest coefficient is at most
    ``rank_tol * ||b_i|| * max_l ||v_l||`` is treated as dependent and
    skipped; the basis then has ``n - effective_rank`` columns.
    """
    n, m = B.shape
    if m > n:
        raise DimensionError(f"B must have at least as many rows as columns, got {B.shape}")
    if min(rho, tau, rank_tol) < 0:
        raise ValueError("rho, tau and rank_tol must be non-negative")
    V = [SparseVector.unit(i, n) for i in range(n)]
    perm = np.arange(n)
    p = 0
    dependent = []
    for i in range(m):
        if p == n:
            dependent.append(i)
            continue
        b = B.dense_column(i)
        sigma = np.array([V[l].dot(b) for l in range(p, n)])
        lstar = int(np.argmax(np.abs(sigma)))
        smax = abs(sigma[lstar])
        colscale = max(V[l].norm() for l in range(p, n))
        if smax == 0.0 or smax <= rank_tol * np.linalg.norm(b) * colscale:
            dependent.append(i)
            continue
        if lstar:
            V[p], V[p + lstar] = V[p + lstar], V[p]
            perm[[p, p + lstar]] = perm[[p + lstar, p]]
            sigma[[0, lstar]] = sigma[[lstar, 0]]
        pivot = V[p]
        s1 = sigma[0]
        for off in range(1, n - p):
            coef = sigma[off] / s1
            if abs(coef) > rho:
                V[p + off] = axpy_drop(V[p + off], -coef, pivot, tau)
        p += 1
    return NullspaceBasis(
        Z=SparseMatrix.from_columns(V[p:], nrows=n),
        effective_rank=p,
        permutation=perm,
        leading=SparseMatrix.from_columns(V[:p], nrows=n),
        dependent_columns=tuple(dependent),
    )


def mgs_m_orth(Z: SparseMatrix, M, params: OrthoParams = OrthoParams()) -> SparseMatrix:
    """Windowed modified Gram-Schmidt in the M inner product.

    Column ``i`` is orthogonalized against the previous ``params.window``
    output columns, entries below ``drop_tol * ||z_i||_2`` are dropped, and
    the column is scaled to unit M-norm. ``M`` must be symmetric.
    """
    M = aslinearoperator(M)
    n, k = Z.shape
    if M.shape != (n, n):
        raise DimensionError(f"M has shape {M.shape}, basis has {n} rows")
    out = []
    mz = []     # M @ zbar_j for the columns still inside the window
    for i in range(k):
        zi = Z.dense_column(i)
        for j in range(max(i - params.window, 0), i):
            zi -= np.dot(mz[j], zi) * out[j]
        if i > 0:
            col = drop_small(SparseVector.from_dense(zi), params.drop_tol)
            zi = col.to_dense()
        mzi = M.apply(zi)
        d = float(np.dot(zi, mzi))
        if not d > 0:
            raise NonPositiveNormError(i, d)
        scale = 1.0 / np.sqrt(d)
        out.append(zi * scale)
        mz.append(mzi * scale)
        if i - params.window >= 0:
            # no longer reachable by later columns
            mz[i - params.window] = None
            out[i - params.window] = SparseVector.from_dense(out[i - params.window])
    cols = [c if isinstance(c, SparseVector) else SparseVector.from_dense(c) for c in out]
    return SparseMatrix.from_columns(cols, nrows=n)


def nullspace_residual(B: SparseMatrix, Z: SparseMatrix) -> float:
    """Largest absolute entry of ``B^T Z``, computed one column of Z at a time."""
    if B.nrows != Z.nrows:
        raise DimensionError(f"B has {B.nrows} rows, Z has {Z.nrows}")
    worst = 0.0
    for j in range(Z.ncols):
        col = B.rmatvec(Z.dense_column(j))
        if col.size:
            worst = max(worst, float(np.abs(col).max()))
    return worst
