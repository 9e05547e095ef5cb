"""numba-compiled sparse kernels (same contracts as ``_kernels_numpy``)."""
import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def csc_matvec(colptr, rowidx, values, x, nrows):
    y = np.zeros(nrows)
    for j in range(colptr.size - 1):
        xj = x[j]
        for k in range(colptr[j], colptr[j + 1]):
            y[rowidx[k]] += values[k] * xj
    return y


@njit(cache=True)
def csc_rmatvec(colptr, rowidx, values, x, ncols):
    y = np.zeros(ncols)
    for j in range(ncols):
        acc = 0.0
        for k in range(colptr[j], colptr[j + 1]):
            acc += values[k] * x[rowidx[k]]
        y[j] = acc
    return y


@njit(cache=True)
def csc_transpose(colptr, rowidx, values, nrows, ncols):
    nnz = colptr[ncols]
    t_colptr = np.zeros(nrows + 1, dtype=np.int64)
    for k in range(nnz):
        t_colptr[rowidx[k] + 1] += 1
    for i in range(nrows):
        t_colptr[i + 1] += t_colptr[i]
    fill = t_colptr[:-1].copy()
    t_rowidx = np.empty(nnz, dtype=np.int64)
    t_values = np.empty(nnz)
    for j in range(ncols):
        for k in range(colptr[j], colptr[j + 1]):
            r = rowidx[k]
            p = fill[r]
            t_rowidx[p] = j
            t_values[p] = values[k]
            fill[r] = p + 1
    return t_colptr, t_rowidx, t_values


@njit(cache=True)
def sparse_dot(idx, val, x):
    acc = 0.0
    for k in range(idx.size):
        acc += val[k] * x[idx[k]]
    return acc


@njit(cache=True)
def axpy_drop(t_idx, t_val, alpha, s_idx, s_val, tau):
    nt = t_idx.size
    ns = s_idx.size
    idx = np.empty(nt + ns, dtype=np.int64)
    val = np.empty(nt + ns)
    a = 0
    b = 0
    n = 0
    while a < nt or b < ns:
        if b >= ns or (a < nt and t_idx[a] < s_idx[b]):
            idx[n] = t_idx[a]
            val[n] = t_val[a]
            a += 1
        elif a >= nt or s_idx[b] < t_idx[a]:
            idx[n] = s_idx[b]
            val[n] = alpha * s_val[b]
            b += 1
        else:
            idx[n] = t_idx[a]
            val[n] = t_val[a] + alpha * s_val[b]
            a += 1
            b += 1
        n += 1
    sq = 0.0
    for k in range(n):
        sq += val[k] * val[k]
    cut = tau * np.sqrt(sq)
    m = 0
    for k in range(n):
        v = val[k]
        if v != 0.0 and abs(v) >= cut:
            idx[m] = idx[k]
            val[m] = v
            m += 1
    return idx[:m].copy(), val[:m].copy()


@njit(cache=True)
def drop_small(idx, val, tau):
    sq = 0.0
    for k in range(val.size):
        sq += val[k] * val[k]
    cut = tau * np.sqrt(sq)
    keep = np.empty(val.size, dtype=np.bool_)
    for k in range(val.size):
        keep[k] = val[k] != 0.0 and abs(val[k]) >= cut
    return idx[keep], val[keep]
