"""Backend selection for the hot sparse kernels.

The numba backend is used when numba imports cleanly. Set
``SADDLEPOINT_BACKEND=numpy`` to force the pure-numpy fallback (useful for
debugging and for the kernel benchmark).
"""
import importlib
import logging
import os

from . import _kernels_numpy

log = logging.getLogger(__name__)

BACKENDS = ("numba", "numpy")


def load_backend(name=None):
    """Return the kernel module for ``name`` (default: environment choice)."""
    if name is None:
        name = os.environ.get("SADDLEPOINT_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; expected one of {BACKENDS}")
    if name == "numpy":
        return _kernels_numpy
    try:
        return importlib.import_module("saddlepoint._kernels_numba")
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable, falling back to numpy kernels")
        return _kernels_numpy


_backend = load_backend()

csc_matvec = _backend.csc_matvec
csc_rmatvec = _backend.csc_rmatvec
csc_transpose = _backend.csc_transpose
sparse_dot = _backend.sparse_dot
axpy_drop = _backend.axpy_drop
drop_small = _backend.drop_small
BACKEND = _backend.NAME
