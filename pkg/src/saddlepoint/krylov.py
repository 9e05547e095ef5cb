"""Krylov solvers: GMRES(m), flexible GMRES(m), CG, LSQR and MRS.

All solvers start from the zero vector and report relative residual
histories (``||r_k|| / ||b||``, initial entry included).
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .operators import LinearOperator, aslinearoperator
from .sparse import DimensionError

_EPS = np.finfo(np.float64).eps


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    BREAKDOWN = "breakdown"


@dataclass(frozen=True)
class StopCriteria:
    rel_tol: float = 1e-5
    max_iters: int = 1000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolverStats:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    status: Status = Status.CONVERGED
    final_relative_residual: float = 0.0

    def _finish(self, status, final=None):
        self.status = status
        if final is not None:
            if self.residual_history:
                self.residual_history[-1] = final
            else:
                self.residual_history.append(final)
        self.final_relative_residual = self.residual_history[-1]
        return self


class BreakdownError(ArithmeticError):
    """Raised by CG when the operator is found not to be positive definite."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


Preconditioner = Callable[[np.ndarray], np.ndarray]


def _check_square(op, b):
    op = aslinearoperator(op)
    b = np.asarray(b, dtype=np.float64)
    if op.nrows != op.ncols:
        raise DimensionError(f"square operator required, got {op.shape}")
    if b.shape != (op.nrows,):
        raise DimensionError(f"rhs length {b.shape} does not match operator {op.shape}")
    return op, b


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0, a
    r = math.hypot(a, b)
    return a / r, b / r, r


def _orthogonalize(V, w, j):
    """MGS against V[:j+1], with one extra pass if orthogonality is lost."""
    h = np.zeros(j + 2)
    for i in range(j + 1):
        c = np.dot(V[i], w)
        h[i] = c
        w -= c * V[i]
    nw = np.linalg.norm(w)
    if nw > 0:
        proj = V[: j + 1] @ w
        if np.max(np.abs(proj)) > 1e-8 * nw:
            for i in range(j + 1):
                c = np.dot(V[i], w)
                h[i] += c
                w -= c * V[i]
            nw = np.linalg.norm(w)
    h[j + 1] = nw
    return h


def _gmres(op, b, precond, restart, stop):
    op, b = _check_square(op, b)
    if restart < 1:
        raise ValueError("restart must be at least 1")
    n = op.nrows
    stats = SolverStats()
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        stats.residual_history.append(0.0)
        return x, stats._finish(Status.CONVERGED)
    stats.residual_history.append(1.0)
    r = b.copy()
    beta = bnorm
    while True:
        m = min(restart, stop.max_iters - stats.iterations)
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n)) if precond is not None else None
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        happy = False
        for j in range(m):
            if precond is not None:
                z = np.asarray(precond(V[j]), dtype=np.float64)
                if z.shape != (n,):
                    raise DimensionError("preconditioner changed the vector length")
                Z[j] = z
            else:
                z = V[j]
            w = op.apply(z)
            wnorm = np.linalg.norm(w)
            h = _orthogonalize(V, w, j)
            for i in range(j):
                t = cs[i] * h[i] + sn[i] * h[i + 1]
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1]
                h[i] = t
            cs[j], sn[j], h[j] = _givens(h[j], h[j + 1])
            hnext = h[j + 1]
            h[j + 1] = 0.0
            H[: j + 2, j] = h
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            stats.iterations += 1
            stats.residual_history.append(abs(g[j + 1]) / bnorm)
            if hnext <= 10 * _EPS * wnorm:
                happy = True
                break
            V[j + 1] = w / hnext
            if abs(g[j + 1]) <= stop.rel_tol * bnorm:
                break
        # back substitution on the k x k triangle
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            if H[i, i] == 0.0:
                y[i] = 0.0
                continue
            y[i] = (g[i] - H[i, i + 1:k] @ y[i + 1:k]) / H[i, i]
        basis = Z if precond is not None else V
        x = x + basis[:k].T @ y
        r = b - op.apply(x)
        beta = np.linalg.norm(r)
        rel = beta / bnorm
        if rel <= stop.rel_tol:
            return x, stats._finish(Status.CONVERGED, rel)
        if happy:
            status = Status.BREAKDOWN if precond is not None else Status.CONVERGED
            return x, stats._finish(status, rel)
        if stats.iterations >= stop.max_iters:
            return x, stats._finish(Status.MAX_ITERATIONS, rel)
        stats.residual_history[-1] = rel


def gmres(op, b, restart: int = 10, stop: StopCriteria = StopCriteria()):
    """Restarted GMRES(m), unpreconditioned, zero initial guess.

    Returns ``(x, stats)``. The last history entry is the true residual of
    the returned iterate, recomputed from ``b - op @ x``.
    """
    return _gmres(op, b, None, restart, stop)


def fgmres(op, b, precond: Optional[Preconditioner], restart: int = 10,
           stop: StopCriteria = StopCriteria()):
    """Right-preconditioned flexible GMRES(m).

    ``precond(v)`` approximates ``M^{-1} v`` and may change between calls;
    the preconditioned directions are stored so the update stays exact.
    Residuals refer to the unpreconditioned system.
    """
    if precond is None:
        precond = np.copy
    return _gmres(op, b, precond, restart, stop)


def cg(op, b, stop: StopCriteria = StopCriteria()):
    """Conjugate gradients for symmetric positive definite ``op``.

    Raises BreakdownError when a search direction has ``p^T op p <= 0``.
    """
    op, b = _check_square(op, b)
    stats = SolverStats()
    x = np.zeros(op.nrows)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        stats.residual_history.append(0.0)
        return x, stats._finish(Status.CONVERGED)
    stats.residual_history.append(1.0)
    r = b.copy()
    p = r.copy()
    rr = np.dot(r, r)
    while stats.iterations < stop.max_iters:
        q = op.apply(p)
        pq = np.dot(p, q)
        if not pq > 0:
            stats._finish(Status.BREAKDOWN)
            raise BreakdownError(
                f"CG breakdown at iteration {stats.iterations + 1}: p^T A p = {pq:.3e}", stats)
        alpha = rr / pq
        x += alpha * p
        r -= alpha * q
        rr_new = np.dot(r, r)
        stats.iterations += 1
        rel = math.sqrt(rr_new) / bnorm
        stats.residual_history.append(rel)
        if rel <= stop.rel_tol:
            return x, stats._finish(Status.CONVERGED)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, stats._finish(Status.MAX_ITERATIONS)


def lsqr(op, b, stop: StopCriteria = StopCriteria()):
    """LSQR (Paige & Saunders) without damping, zero initial guess.

    Stops when ``||r|| / ||b|| <= rel_tol`` (consistent systems) or when the
    normal-equation residual ``||A^T r|| / (||A|| ||r||) <= rel_tol``
    (least-squares systems). For consistent underdetermined systems the
    iterate is the minimum-norm solution.
    """
    op = aslinearoperator(op)
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (op.nrows,):
        raise DimensionError(f"rhs length {b.shape} does not match operator {op.shape}")
    stats = SolverStats()
    x = np.zeros(op.ncols)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        stats.residual_history.append(0.0)
        return x, stats._finish(Status.CONVERGED)
    stats.residual_history.append(1.0)

    beta = bnorm
    u = b / beta
    v = op.apply_transpose(u)
    alpha = np.linalg.norm(v)
    if alpha == 0.0:
        # A^T b = 0: x = 0 already solves the least-squares problem
        return x, stats._finish(Status.CONVERGED)
    v = v / alpha
    w = v.copy()
    phibar = beta
    rhobar = alpha
    anorm_sq = 0.0
    while stats.iterations < stop.max_iters:
        u = op.apply(v) - alpha * u
        beta = np.linalg.norm(u)
        anorm_sq += alpha * alpha + beta * beta
        if beta > 0:
            u = u / beta
            v_new = op.apply_transpose(u) - beta * v
            alpha = np.linalg.norm(v_new)
            if alpha > 0:
                v_new = v_new / alpha
        else:
            v_new = np.zeros_like(v)
            alpha = 0.0
        rho = math.hypot(rhobar, beta)
        c = rhobar / rho
        s = beta / rho
        theta = s * alpha
        rhobar = -c * alpha
        phi = c * phibar
        phibar = s * phibar
        x += (phi / rho) * w
        w = v_new - (theta / rho) * w
        v = v_new
        stats.iterations += 1
        rnorm = abs(phibar)
        rel = rnorm / bnorm
        stats.residual_history.append(rel)
        arnorm = rnorm * alpha * abs(c)
        anorm = math.sqrt(anorm_sq)
        if rel <= stop.rel_tol:
            return x, stats._finish(Status.CONVERGED)
        if rnorm > 0 and arnorm <= stop.rel_tol * anorm * rnorm:
            return x, stats._finish(Status.CONVERGED)
        if beta == 0.0 or alpha == 0.0:
            # bidiagonalization terminated: x is the exact least-squares solution
            return x, stats._finish(Status.CONVERGED)
    return x, stats._finish(Status.MAX_ITERATIONS)


def mrs(J, b, stop: StopCriteria = StopCriteria()):
    """Minimal residual solver for ``(I + J) x = b`` with ``J`` skew-symmetric.

    Skew-Lanczos gives ``J Q_k = Q_{k+1} T_k`` with a tridiagonal skew ``T``
    and zero diagonal, so the projected matrix ``I + T`` is tridiagonal and
    its least-squares problem is updated with plane rotations, MINRES-style.
    The residual estimate shrinks by ``|sin|`` each step, so the history is
    non-increasing.
    """
    J, b = _check_square(J, b)
    n = J.nrows
    stats = SolverStats()
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        stats.residual_history.append(0.0)
        return x, stats._finish(Status.CONVERGED)
    stats.residual_history.append(1.0)

    q_prev = np.zeros(n)
    q = b / bnorm
    beta = 0.0          # coupling to the previous Lanczos vector
    phibar = bnorm
    c_old, s_old = 1.0, 0.0   # rotation k-2
    c, s = 1.0, 0.0           # rotation k-1
    d_old = np.zeros(n)
    d = np.zeros(n)
    while stats.iterations < stop.max_iters:
        jq = J.apply(q)
        w = jq + beta * q_prev
        beta_next = np.linalg.norm(w)
        # column k of I + T: (row k-1) -beta, (row k) 1, (row k+1) beta_next
        # rotation k-2 acts on rows k-2, k-1; entry at row k-2 starts at zero
        r2 = s_old * (-beta)
        h1 = c_old * (-beta)
        # rotation k-1 acts on rows k-1, k
        r1 = c * h1 + s * 1.0
        h0 = -s * h1 + c * 1.0
        c_new, s_new, r0 = _givens(h0, beta_next)
        d_new = (q - r1 * d - r2 * d_old) / r0
        phi = c_new * phibar
        phibar = -s_new * phibar
        x += phi * d_new
        stats.iterations += 1
        stats.residual_history.append(abs(phibar) / bnorm)
        if abs(phibar) <= stop.rel_tol * bnorm:
            return x, stats._finish(Status.CONVERGED)
        if beta_next <= 10 * _EPS * (np.linalg.norm(jq) + beta):
            # invariant subspace reached: the current iterate is exact
            stats.residual_history[-1] = 0.0
            return x, stats._finish(Status.CONVERGED)
        q_prev, q = q, w / beta_next
        beta = beta_next
        c_old, s_old, c, s = c, s, c_new, s_new
        d_old, d = d, d_new
    return x, stats._finish(Status.MAX_ITERATIONS)
