"""Pure-numpy versions of the sparse kernels.

Every function here has a twin in ``_kernels_numba`` with the same signature
and the same accumulation order, so both backends agree to rounding.
"""
import numpy as np

NAME = "numpy"


def csc_matvec(colptr, rowidx, values, x, nrows):
    counts = np.diff(colptr)
    # bincount accumulates in storage order: column-major, ascending row
    prod = values * np.repeat(x, counts)
    return np.bincount(rowidx, weights=prod, minlength=nrows).astype(np.float64)


def csc_rmatvec(colptr, rowidx, values, x, ncols):
    counts = np.diff(colptr)
    cols = np.repeat(np.arange(ncols), counts)
    prod = values * x[rowidx]
    return np.bincount(cols, weights=prod, minlength=ncols).astype(np.float64)


def csc_transpose(colptr, rowidx, values, nrows, ncols):
    counts = np.diff(colptr)
    cols = np.repeat(np.arange(ncols, dtype=np.int64), counts)
    # stable sort on row keeps ascending column order inside each new column
    order = np.argsort(rowidx, kind="stable")
    t_colptr = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rowidx, minlength=nrows), out=t_colptr[1:])
    return t_colptr, cols[order].astype(np.int64), values[order].copy()


def sparse_dot(idx, val, x):
    if idx.size == 0:
        return 0.0
    return float(np.dot(val, x[idx]))


def axpy_drop(t_idx, t_val, alpha, s_idx, s_val, tau):
    idx = np.concatenate((t_idx, s_idx))
    vals = np.concatenate((t_val, alpha * s_val))
    uniq, inv = np.unique(idx, return_inverse=True)
    out = np.bincount(inv, weights=vals, minlength=uniq.size)
    if out.size == 0:
        return uniq.astype(np.int64), out
    nrm = np.sqrt(np.dot(out, out))
    keep = (out != 0.0) & (np.abs(out) >= tau * nrm)
    return uniq[keep].astype(np.int64), out[keep]


def drop_small(idx, val, tau):
    nrm = np.sqrt(np.dot(val, val)) if val.size else 0.0
    keep = (val != 0.0) & (np.abs(val) >= tau * nrm)
    return idx[keep], val[keep]
