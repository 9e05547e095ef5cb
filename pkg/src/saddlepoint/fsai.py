"""Factorized sparse approximate inverse by implicit A-conjugation.

The matrix being factorized is only ever touched through ``op @ e_j``, one
column per step, so it never has to be formed.
"""
from dataclasses import dataclass

import numpy as np

from .operators import LinearOperator, aslinearoperator, compose
from .sparse import DimensionError, SparseMatrix, SparseVector, axpy_drop


class NotPositiveDefiniteError(ArithmeticError):
    """A pivot of the conjugation was not safely positive."""

    def __init__(self, step, pivot):
        super().__init__(f"non-positive pivot {pivot:.3e} at step {step}")
        self.step = step
        self.pivot = pivot


@dataclass(frozen=True)
class FsaiFactor:
    """Upper-triangular ``W`` with ``W^T N W ~ I``; ``diag_values`` are the pivots."""

    W: SparseMatrix
    diag_values: np.ndarray

    @property
    def nnz(self):
        return self.W.nnz

    @property
    def dim(self):
        return self.W.ncols


def fsai(Ns, dim=None, rho: float = 0.0, tau: float = 0.0,
         pivot_floor: float = 1e-14) -> FsaiFactor:
    """Factorize the symmetric positive definite operator ``Ns``.

    Step ``j`` extracts ``n_j = Ns e_j``, forms ``sigma_i = w_i^T n_j`` for
    ``i >= j`` from the current columns, and conjugates every later column
    with ``|sigma_i / sigma_j| > rho`` against ``w_j`` (dropping entries
    below ``tau * ||w_i||``). Columns are finally scaled by
    ``1/sqrt(sigma_i)``.

    Raises NotPositiveDefiniteError if a pivot ``sigma_j`` is at most
    ``pivot_floor`` times the magnitude of its column.
    """
    Ns = aslinearoperator(Ns)
    if dim is None:
        dim = Ns.nrows
    if Ns.shape != (dim, dim):
        raise DimensionError(f"operator shape {Ns.shape} does not match dim {dim}")
    W = [SparseVector.unit(i, dim) for i in range(dim)]
    pivots = np.zeros(dim)
    e = np.zeros(dim)
    for j in range(dim):
        e[j] = 1.0
        nj = Ns.apply(e)
        e[j] = 0.0
        sigma = np.array([W[i].dot(nj) for i in range(j, dim)])
        s_j = sigma[0]
        scale = float(np.abs(nj).max()) if nj.size else 0.0
        if not s_j > pivot_floor * scale:
            raise NotPositiveDefiniteError(j, float(s_j))
        pivots[j] = s_j
        wj = W[j]
        for off in range(1, dim - j):
            coef = sigma[off] / s_j
            if abs(coef) > rho:
                W[j + off] = axpy_drop(W[j + off], -coef, wj, tau)
    scaled = [w.scaled(1.0 / np.sqrt(s)) for w, s in zip(W, pivots)]
    return FsaiFactor(SparseMatrix.from_columns(scaled, nrows=dim), pivots)


def apply_split_preconditioned(inner, factor) -> LinearOperator:
    """The composed operator ``W^T (inner) W``; nothing is materialized."""
    W = factor.W if isinstance(factor, FsaiFactor) else factor
    inner = aslinearoperator(inner)
    if inner.shape != (W.nrows, W.nrows):
        raise DimensionError(f"inner operator {inner.shape} does not fit W {W.shape}")
    return compose(W.T, inner, W)
