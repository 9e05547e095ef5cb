"""Compare the numba and numpy kernel backends.

Kernel timings call both backend modules directly in one process. The SAROC
timing runs a subprocess per backend, since the backend is fixed at import
through SADDLEPOINT_BACKEND.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 20]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from saddlepoint.kernels import load_backend

SAROC_SNIPPET = """
import time, numpy as np
from saddlepoint import SparseMatrix, saroc
rng = np.random.default_rng(0)
def make(n, m):
    d = np.where(rng.random((n, m)) < 0.05, rng.standard_normal((n, m)), 0.0)
    d[:m, :m] += np.diag(1.0 + rng.random(m))
    return SparseMatrix.from_dense(d[rng.permutation(n)])
saroc(make(10, 3))
mats = [make(int(rng.integers(50, 201)), int(rng.integers(5, 51))) for _ in range(50)]
t = time.perf_counter()
for B in mats:
    saroc(B)
print(time.perf_counter() - t)
"""


def random_csc(rng, n, density):
    nnz = int(n * n * density)
    rows = rng.integers(0, n, nnz)
    cols = rng.integers(0, n, nnz)
    dense_cols = np.bincount(cols, minlength=n)
    colptr = np.r_[0, np.cumsum(dense_cols)]
    order = np.lexsort((rows, cols))
    return colptr.astype(np.int64), rows[order].astype(np.int64), rng.standard_normal(nnz)


def bench(fn, repeat):
    fn()  # warm-up, includes JIT compilation for numba
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(n, repeat):
    rng = np.random.default_rng(1)
    colptr, rowidx, values = random_csc(rng, n, 50.0 / n)
    x = rng.standard_normal(n)
    t_idx = np.sort(rng.choice(n, n // 10, replace=False)).astype(np.int64)
    s_idx = np.sort(rng.choice(n, n // 10, replace=False)).astype(np.int64)
    t_val, s_val = rng.standard_normal(t_idx.size), rng.standard_normal(s_idx.size)
    rows = []
    for name in ("numba", "numpy"):
        k = load_backend(name)
        rows.append((name, {
            "matvec": bench(lambda: k.csc_matvec(colptr, rowidx, values, x, n), repeat),
            "rmatvec": bench(lambda: k.csc_rmatvec(colptr, rowidx, values, x, n), repeat),
            "axpy_drop": bench(lambda: k.axpy_drop(t_idx, t_val, 0.7, s_idx, s_val, 0.5), repeat),
        }))
    return rows


def saroc_time(backend):
    env = dict(os.environ, SADDLEPOINT_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", SAROC_SNIPPET], env=env, check=True,
                         capture_output=True, text=True).stdout
    return float(out.split()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rows = kernel_rows(args.n, args.repeat)
    for name, row in rows:
        row["saroc x50"] = saroc_time(name)
    cols = list(rows[0][1])
    print(f"{'backend':<8}" + "".join(f"{c:>14}" for c in cols))
    for name, row in rows:
        print(f"{name:<8}" + "".join(f"{row[c] * 1e3:>12.3f}ms" for c in cols))
    speed = {c: rows[1][1][c] / rows[0][1][c] for c in cols}
    print(f"{'speedup':<8}" + "".join(f"{speed[c]:>13.1f}x" for c in cols))


if __name__ == "__main__":
    main()
