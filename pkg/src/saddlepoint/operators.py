"""Lazily composed linear operators.

Operators support ``a + b``, ``a - b``, ``alpha * a``, ``-a``, ``a @ b``
(chain product), ``a @ x`` (application) and ``a.T``. Nothing is ever
materialized; applying a composition costs the sum of its parts.
"""
from typing import Callable, Optional

import numpy as np

from .sparse import DimensionError, SparseMatrix


class LinearOperator:
    def __init__(self, nrows: int, ncols: int, matvec: Callable,
                 rmatvec: Optional[Callable] = None, descriptor: str = "op"):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self._matvec = matvec
        self._rmatvec = rmatvec
        self.descriptor = descriptor

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def has_transpose(self):
        return self._rmatvec is not None

    def __repr__(self):
        return f"<LinearOperator {self.nrows}x{self.ncols}: {self.descriptor}>"

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.ncols,):
            raise DimensionError(f"{self.descriptor}: expected length {self.ncols}, got {x.shape}")
        return self._matvec(x)

    def apply_transpose(self, x):
        if self._rmatvec is None:
            raise NotImplementedError(f"{self.descriptor}: transpose application unavailable")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.nrows,):
            raise DimensionError(f"{self.descriptor}^T: expected length {self.nrows}, got {x.shape}")
        return self._rmatvec(x)

    @property
    def T(self):
        return transposed(self)

    def __matmul__(self, other):
        if isinstance(other, (LinearOperator, SparseMatrix)):
            return compose(self, other)
        return self.apply(other)

    def __rmatmul__(self, other):
        if isinstance(other, SparseMatrix):
            return compose(other, self)
        return NotImplemented

    def __add__(self, other):
        return op_sum(self, other)

    def __radd__(self, other):
        return op_sum(other, self)

    def __sub__(self, other):
        return op_sum(self, scaled(-1.0, other))

    def __rsub__(self, other):
        return op_sum(other, scaled(-1.0, self))

    def __mul__(self, alpha):
        if np.isscalar(alpha):
            return scaled(alpha, self)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return scaled(-1.0, self)


def aslinearoperator(a) -> LinearOperator:
    """Wrap a SparseMatrix or a dense 2-D array; operators pass through."""
    if isinstance(a, LinearOperator):
        return a
    if isinstance(a, SparseMatrix):
        return LinearOperator(a.nrows, a.ncols, a.matvec, a.rmatvec,
                              f"sparse{a.nrows}x{a.ncols}")
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise TypeError("expected a matrix-like object")
    return LinearOperator(arr.shape[0], arr.shape[1], arr.__matmul__,
                          arr.T.__matmul__, f"dense{arr.shape[0]}x{arr.shape[1]}")


def identity(n: int) -> LinearOperator:
    return LinearOperator(n, n, np.copy, np.copy, f"I{n}")


def transposed(a) -> LinearOperator:
    a = aslinearoperator(a)
    if not a.has_transpose:
        raise NotImplementedError(f"{a.descriptor}: transpose unavailable")
    return LinearOperator(a.ncols, a.nrows, a._rmatvec, a._matvec, f"({a.descriptor})^T")


def scaled(alpha: float, a) -> LinearOperator:
    a = aslinearoperator(a)
    alpha = float(alpha)
    rmv = None
    if a.has_transpose:
        def rmv(x):
            return alpha * a._rmatvec(x)
    return LinearOperator(a.nrows, a.ncols, lambda x: alpha * a._matvec(x), rmv,
                          f"{alpha:g}*{a.descriptor}")


def op_sum(*terms) -> LinearOperator:
    """Sum of operators; a bare scalar term means that multiple of the identity."""
    ops = []
    shifts = 0.0
    for t in terms:
        if np.isscalar(t):
            shifts += float(t)
        else:
            ops.append(aslinearoperator(t))
    if not ops:
        raise ValueError("op_sum needs at least one operator")
    nrows, ncols = ops[0].shape
    for op in ops[1:]:
        if op.shape != (nrows, ncols):
            raise DimensionError(f"cannot add {op.shape} to {(nrows, ncols)}")
    if shifts != 0.0:
        if nrows != ncols:
            raise DimensionError("identity shift on a non-square operator")
        ops.insert(0, scaled(shifts, identity(nrows)))

    def mv(x):
        y = ops[0]._matvec(x)
        for op in ops[1:]:
            y = y + op._matvec(x)
        return y

    rmv = None
    if all(op.has_transpose for op in ops):
        def rmv(x):
            y = ops[0]._rmatvec(x)
            for op in ops[1:]:
                y = y + op._rmatvec(x)
            return y
    return LinearOperator(nrows, ncols, mv, rmv,
                          "(" + " + ".join(op.descriptor for op in ops) + ")")


def compose(*factors) -> LinearOperator:
    """Chain product ``F1 F2 ... Fk``; scalars in the list scale the product."""
    alpha = 1.0
    ops = []
    for f in factors:
        if np.isscalar(f):
            alpha *= float(f)
        else:
            ops.append(aslinearoperator(f))
    if not ops:
        raise ValueError("compose needs at least one operator")
    for left, right in zip(ops, ops[1:]):
        if left.ncols != right.nrows:
            raise DimensionError(
                f"cannot chain {left.descriptor} ({left.shape}) with {right.descriptor} ({right.shape})")

    def mv(x):
        for op in reversed(ops):
            x = op._matvec(x)
        return alpha * x if alpha != 1.0 else x

    rmv = None
    if all(op.has_transpose for op in ops):
        def rmv(x):
            for op in ops:
                x = op._rmatvec(x)
            return alpha * x if alpha != 1.0 else x
    desc = "*".join(op.descriptor for op in ops)
    if alpha != 1.0:
        desc = f"{alpha:g}*{desc}"
    return LinearOperator(ops[0].nrows, ops[-1].ncols, mv, rmv, desc)


def materialize(a) -> np.ndarray:
    """Dense matrix of an operator, built column by column from ``a @ e_j``."""
    a = aslinearoperator(a)
    out = np.empty(a.shape)
    e = np.zeros(a.ncols)
    for j in range(a.ncols):
        e[j] = 1.0
        out[:, j] = a._matvec(e)
        e[j] = 0.0
    return out
