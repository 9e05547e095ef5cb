"""Compressed sparse-column storage and the column kernels built on it."""
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels as _k


class DimensionError(ValueError):
    """Operand shapes do not conform."""


class SparseVector(NamedTuple):
    """A sparse column: sorted, duplicate-free ``indices`` with nonzero ``values``."""

    indices: np.ndarray
    values: np.ndarray
    size: int

    @classmethod
    def unit(cls, i, size):
        return cls(np.array([i], dtype=np.int64), np.array([1.0]), size)

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(x).astype(np.int64)
        return cls(idx, x[idx].copy(), x.size)

    @property
    def nnz(self):
        return int(self.indices.size)

    def to_dense(self):
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out

    def norm(self):
        return float(np.sqrt(np.dot(self.values, self.values)))

    def dot(self, x):
        """Inner product with a dense vector."""
        return _k.sparse_dot(self.indices, self.values, x)

    def scaled(self, alpha):
        if alpha == 0.0:
            return SparseVector(self.indices[:0], self.values[:0], self.size)
        return SparseVector(self.indices, self.values * alpha, self.size)


def axpy_drop(target: SparseVector, alpha: float, source: SparseVector, tau: float) -> SparseVector:
    """Return ``target + alpha * source`` with small entries removed.

    An entry survives only if ``|v| >= tau * ||v||_2``, where the norm is that
    of the updated column before anything is dropped. Exact zeros are always
    removed, so ``tau = 0`` gives plain sparse addition.
    """
    if target.size != source.size:
        raise DimensionError(f"column lengths differ: {target.size} vs {source.size}")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    idx, val = _k.axpy_drop(target.indices, target.values, float(alpha),
                            source.indices, source.values, float(tau))
    return SparseVector(idx, val, target.size)


def drop_small(vec: SparseVector, tau: float) -> SparseVector:
    """Remove entries with ``|v| < tau * ||v||_2`` (and exact zeros)."""
    idx, val = _k.drop_small(vec.indices, vec.values, float(tau))
    return SparseVector(idx, val, vec.size)


class SparseMatrix:
    """Immutable CSC matrix of float64.

    Row indices are strictly increasing inside every column and no stored
    value is exactly zero. Use the ``from_*`` constructors for unsorted or
    duplicated input; the raw constructor only validates.
    """

    __slots__ = ("nrows", "ncols", "colptr", "rowidx", "values")

    def __init__(self, nrows, ncols, colptr, rowidx, values, check=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.colptr = np.ascontiguousarray(colptr, dtype=np.int64)
        self.rowidx = np.ascontiguousarray(rowidx, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        for arr in (self.colptr, self.rowidx, self.values):
            arr.flags.writeable = False
        if check:
            self._validate()

    def _validate(self):
        cp, ri = self.colptr, self.rowidx
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("negative dimension")
        if cp.shape != (self.ncols + 1,):
            raise ValueError("colptr must have length ncols + 1")
        if cp[0] != 0 or cp[-1] != ri.size or ri.size != self.values.size:
            raise ValueError("colptr endpoints inconsistent with nnz")
        if np.any(np.diff(cp) < 0):
            raise ValueError("colptr must be nondecreasing")
        if ri.size:
            if ri.min() < 0 or ri.max() >= self.nrows:
                raise ValueError("row index out of range")
            # strictly increasing inside each column: a non-increase is only
            # allowed where a new column starts
            steps = np.diff(ri) <= 0
            starts = np.zeros(ri.size, dtype=bool)
            starts[cp[1:-1][cp[1:-1] < ri.size]] = True
            if np.any(steps & ~starts[1:]):
                raise ValueError("row indices must be strictly increasing within columns")
        if np.any(self.values == 0.0):
            raise ValueError("explicit zeros are not allowed")

    # construction -------------------------------------------------------

    @classmethod
    def from_triplets(cls, nrows, ncols, rows, cols, vals):
        """Build from coordinate triplets; duplicates are summed, zeros purged."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.size == cols.size == vals.size):
            raise ValueError("triplet arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= nrows
                          or cols.min() < 0 or cols.max() >= ncols):
            raise DimensionError("triplet index out of range")
        key = cols * max(nrows, 1) + rows
        order = np.argsort(key, kind="stable")
        key = key[order]
        uniq, start = np.unique(key, return_index=True)
        summed = np.add.reduceat(vals[order], start) if uniq.size else vals[:0]
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
        r = uniq % max(nrows, 1)
        c = uniq // max(nrows, 1)
        colptr = np.zeros(ncols + 1, dtype=np.int64)
        np.cumsum(np.bincount(c, minlength=ncols), out=colptr[1:])
        return cls(nrows, ncols, colptr, r, summed, check=False)

    @classmethod
    def from_dense(cls, a):
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        cols, rows = np.nonzero(a.T)
        return cls.from_triplets(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @classmethod
    def from_columns(cls, columns: Sequence[SparseVector], nrows=None):
        if nrows is None:
            if not columns:
                raise ValueError("nrows required for an empty column list")
            nrows = columns[0].size
        colptr = np.zeros(len(columns) + 1, dtype=np.int64)
        for j, col in enumerate(columns):
            if col.size != nrows:
                raise DimensionError(f"column {j} has length {col.size}, expected {nrows}")
            colptr[j + 1] = colptr[j] + col.nnz
        if columns:
            rowidx = np.concatenate([c.indices for c in columns])
            values = np.concatenate([c.values for c in columns])
        else:
            rowidx, values = np.zeros(0, np.int64), np.zeros(0)
        return cls(nrows, len(columns), colptr, rowidx, values)

    @classmethod
    def from_scipy(cls, m):
        m = m.tocsc(copy=True)
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n), check=False)

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, np.zeros(ncols + 1), np.zeros(0), np.zeros(0), check=False)

    # inspection -------------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return int(self.values.size)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"

    def column(self, j) -> SparseVector:
        lo, hi = self.colptr[j], self.colptr[j + 1]
        return SparseVector(self.rowidx[lo:hi], self.values[lo:hi], self.nrows)

    def columns(self):
        return [self.column(j) for j in range(self.ncols)]

    def dense_column(self, j):
        out = np.zeros(self.nrows)
        lo, hi = self.colptr[j], self.colptr[j + 1]
        out[self.rowidx[lo:hi]] = self.values[lo:hi]
        return out

    def triplets(self):
        cols = np.repeat(np.arange(self.ncols, dtype=np.int64), np.diff(self.colptr))
        return self.rowidx.copy(), cols, self.values.copy()

    def to_dense(self):
        out = np.zeros(self.shape)
        r, c, v = self.triplets()
        out[r, c] = v
        return out

    def to_scipy(self):
        import scipy.sparse as sp
        return sp.csc_matrix((self.values.copy(), self.rowidx.copy(), self.colptr.copy()),
                             shape=self.shape)

    def max_abs(self):
        """Largest absolute entry (0 for an empty matrix)."""
        return float(np.abs(self.values).max()) if self.nnz else 0.0

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.colptr, other.colptr)
                and np.array_equal(self.rowidx, other.rowidx)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def is_symmetric(self):
        """Exact (pattern and value) symmetry."""
        return self.nrows == self.ncols and self == self.T

    # arithmetic -------------------------------------------------------

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.ncols,):
            raise DimensionError(f"matvec: expected length {self.ncols}, got {x.shape}")
        return _k.csc_matvec(self.colptr, self.rowidx, self.values, x, self.nrows)

    def rmatvec(self, x):
        """Transpose product ``A^T x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.nrows,):
            raise DimensionError(f"rmatvec: expected length {self.nrows}, got {x.shape}")
        return _k.csc_rmatvec(self.colptr, self.rowidx, self.values, x, self.ncols)

    def __matmul__(self, x):
        if isinstance(x, (np.ndarray, list, tuple)):
            return self.matvec(x)
        return NotImplemented

    @property
    def T(self):
        cp, ri, va = _k.csc_transpose(self.colptr, self.rowidx, self.values,
                                      self.nrows, self.ncols)
        return SparseMatrix(self.ncols, self.nrows, cp, ri, va, check=False)

    def scaled(self, alpha):
        if alpha == 0.0:
            return SparseMatrix.zeros(self.nrows, self.ncols)
        return SparseMatrix(self.nrows, self.ncols, self.colptr, self.rowidx,
                            self.values * alpha, check=False)

    def add(self, other, alpha=1.0, beta=1.0):
        """Return ``alpha * self + beta * other``."""
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        r1, c1, v1 = self.triplets()
        r2, c2, v2 = other.triplets()
        return SparseMatrix.from_triplets(
            self.nrows, self.ncols,
            np.concatenate((r1, r2)), np.concatenate((c1, c2)),
            np.concatenate((alpha * v1, beta * v2)))

    def submatrix(self, rows, cols):
        """Contiguous block ``self[rows, cols]`` for two ``slice`` objects."""
        r0, r1, _ = rows.indices(self.nrows)
        c0, c1, _ = cols.indices(self.ncols)
        r, c, v = self.triplets()
        keep = (r >= r0) & (r < r1) & (c >= c0) & (c < c1)
        return SparseMatrix.from_triplets(max(r1 - r0, 0), max(c1 - c0, 0),
                                          r[keep] - r0, c[keep] - c0, v[keep])


def matvec(a: SparseMatrix, x) -> np.ndarray:
    return a.matvec(x)


def matvec_transpose(a: SparseMatrix, x) -> np.ndarray:
    return a.rmatvec(x)


def symmetric_split(a: SparseMatrix):
    """Split a square matrix into ``((A + A^T)/2, (A - A^T)/2)``.

    The skew part is built entrywise as ``(a_ij - a_ji)/2`` so that its
    pattern and values are exactly antisymmetric.
    """
    if a.nrows != a.ncols:
        raise DimensionError(f"symmetric_split needs a square matrix, got {a.shape}")
    at = a.T
    r1, c1, v1 = a.triplets()
    r2, c2, v2 = at.triplets()
    rows = np.concatenate((r1, r2))
    cols = np.concatenate((c1, c2))
    n = a.nrows
    # the union pattern of A and A^T, with both values gathered per position
    key = cols * max(n, 1) + rows
    uniq, inv = np.unique(key, return_inverse=True)
    upper = np.zeros(uniq.size)
    lower = np.zeros(uniq.size)
    upper[inv[: v1.size]] = v1
    lower[inv[v1.size:]] = v2
    r = uniq % max(n, 1)
    c = uniq // max(n, 1)
    sym = SparseMatrix.from_triplets(n, n, r, c, (upper + lower) / 2)
    skew = SparseMatrix.from_triplets(n, n, r, c, (upper - lower) / 2)
    return sym, skew
