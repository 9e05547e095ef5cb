"""Multi-layer nullspace-preconditioned solvers for saddle-point systems.

The system is ``[[A, B], [-C^T, 0]] [x; y] = [f; g]``. The outer solver is
flexible GMRES; each preconditioner application runs an approximate
nullspace method whose sub-problems are themselves solved iteratively
(LSQR for the constraint blocks, CG or flexible GMRES + MRS for the
projected system).
"""
import enum
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import krylov
from .fsai import FsaiFactor, NotPositiveDefiniteError, apply_split_preconditioned, fsai
from .krylov import BreakdownError, StopCriteria
from .nullspace import NonPositiveNormError, NullspaceBasis, OrthoParams, mgs_m_orth, saroc
from .operators import LinearOperator, aslinearoperator, compose, op_sum, scaled
from .sparse import DimensionError, SparseMatrix, symmetric_split

log = logging.getLogger(__name__)


class Case(enum.Enum):
    SYMMETRIC = "symmetric"
    GENERALIZED = "generalized"
    GENERAL = "general"


class ReportStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    TRUE_RESIDUAL_ABOVE_TOL = "true_residual_above_tol"
    FACTORIZATION_FAILED = "factorization_failed"
    RESOURCE_EXHAUSTED = "resource_exhausted"

    @property
    def marker(self):
        return _MARKERS[self]


_MARKERS = {
    ReportStatus.CONVERGED: "",
    ReportStatus.MAX_ITERATIONS: "‡",
    ReportStatus.TRUE_RESIDUAL_ABOVE_TOL: "⋆",
    ReportStatus.FACTORIZATION_FAILED: "†",
    ReportStatus.RESOURCE_EXHAUSTED: "§",
}


class FactorizationFailed(ArithmeticError):
    """The preconditioner could not be built or applied (non-PD projected operator)."""


def detect_case(A: SparseMatrix, B: SparseMatrix, C: SparseMatrix) -> Case:
    if A.nrows != A.ncols or B.shape != C.shape or B.nrows != A.nrows:
        raise DimensionError(f"inconsistent blocks A{A.shape} B{B.shape} C{C.shape}")
    if B != C:
        return Case.GENERAL
    return Case.SYMMETRIC if A.is_symmetric() else Case.GENERALIZED


@dataclass
class SaddleProblem:
    A: SparseMatrix
    B: SparseMatrix
    C: SparseMatrix
    f: np.ndarray
    g: np.ndarray
    case: Case
    name: str = "problem"

    def __post_init__(self):
        n, m = self.B.shape
        if self.A.shape != (n, n) or self.C.shape != (n, m):
            raise DimensionError(f"inconsistent blocks A{self.A.shape} B{self.B.shape} C{self.C.shape}")
        if m > n:
            raise DimensionError(f"need m <= n, got n={n}, m={m}")
        self.f = np.asarray(self.f, dtype=np.float64)
        self.g = np.asarray(self.g, dtype=np.float64)
        if self.f.shape != (n,) or self.g.shape != (m,):
            raise DimensionError("right-hand side lengths do not match the blocks")
        self.case = Case(self.case)
        if self.case is not Case.GENERAL and self.B != self.C:
            raise ValueError(f"case {self.case.value} requires B == C")
        if self.case is Case.SYMMETRIC and not self.A.is_symmetric():
            raise ValueError("case symmetric requires A == A^T")

    @classmethod
    def from_blocks(cls, A, B, C=None, f=None, g=None, case=None, name="problem"):
        """Fill in ``C = B``, a consistent all-ones right-hand side and the case."""
        if C is None:
            C = B
        if f is None or g is None:
            f0, g0 = make_rhs(A, B, C)
            f = f0 if f is None else f
            g = g0 if g is None else g
        if case is None or case == "auto":
            case = detect_case(A, B, C)
        return cls(A, B, C, f, g, Case(case), name)

    @property
    def n(self):
        return self.A.nrows

    @property
    def m(self):
        return self.B.ncols

    @property
    def rhs(self):
        return np.concatenate((self.f, self.g))

    def operator(self) -> LinearOperator:
        """The saddle matrix, applied blockwise."""
        A, B, C, n = self.A, self.B, self.C, self.n

        def mv(v):
            x, y = v[:n], v[n:]
            return np.concatenate((A.matvec(x) + B.matvec(y), -C.rmatvec(x)))

        def rmv(v):
            x, y = v[:n], v[n:]
            return np.concatenate((A.rmatvec(x) - C.matvec(y), B.rmatvec(x)))

        return LinearOperator(n + self.m, n + self.m, mv, rmv, "saddle")

    def true_relative_residual(self, x, y):
        rhs = self.rhs
        r = rhs - self.operator().apply(np.concatenate((x, y)))
        denom = np.linalg.norm(rhs)
        return float(np.linalg.norm(r) / denom) if denom > 0 else float(np.linalg.norm(r))

    def to_dense(self):
        n, m = self.n, self.m
        out = np.zeros((n + m, n + m))
        out[:n, :n] = self.A.to_dense()
        out[:n, n:] = self.B.to_dense()
        out[n:, :n] = -self.C.to_dense().T
        return out


def make_rhs(A: SparseMatrix, B: SparseMatrix, C: SparseMatrix):
    """Right-hand side for which the all-ones vector is an exact solution."""
    n, m = B.shape
    f = A.matvec(np.ones(n)) + B.matvec(np.ones(m))
    g = -C.rmatvec(np.ones(n))
    return f, g


@dataclass(frozen=True)
class ToleranceProfile:
    name: str
    tau_saroc: float
    rho_saroc: float
    tau_fsai: float
    rho_fsai: float
    tau_mgs: float
    w_mgs: int
    eps_in: float
    eps_innermost: float

    def __post_init__(self):
        if min(self.tau_saroc, self.rho_saroc, self.tau_fsai, self.rho_fsai, self.tau_mgs) < 0:
            raise ValueError("drop tolerances and thresholds must be non-negative")
        if not (self.eps_in > 0 and self.eps_innermost > 0):
            raise ValueError("inner stopping tolerances must be positive")
        if self.w_mgs < 1:
            raise ValueError("w_mgs must be at least 1")

    @classmethod
    def exact(cls, inner_tol=1e-12, window=10**9):
        """No thresholds, no dropping, tight inner tolerances."""
        return cls("exact", 0.0, 0.0, 0.0, 0.0, 0.0, window, inner_tol, inner_tol)

    @property
    def ortho(self):
        return OrthoParams(window=self.w_mgs, drop_tol=self.tau_mgs)


PROFILES = {
    "large": ToleranceProfile("large", 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 5, 1e-3, 1e-3),
    "mix": ToleranceProfile("mix", 1e-2, 1e-2, 1e-3, 1e-3, 1e-2, 5, 1e-4, 1e-5),
    "small": ToleranceProfile("small", 1e-5, 1e-5, 1e-5, 1e-5, 1e-5, 15, 1e-5, 1e-5),
}


def get_profile(profile) -> ToleranceProfile:
    if isinstance(profile, ToleranceProfile):
        return profile
    if profile == "exact":
        return ToleranceProfile.exact()
    try:
        return PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}") from None


@dataclass
class NullspacePreconditioner:
    case: Case
    Z: NullspaceBasis
    U: NullspaceBasis
    W: FsaiFactor
    basis_Z: SparseMatrix       # basis used downstream (Zbar when M-orthogonalized)
    basis_U: SparseMatrix
    Zbar: Optional[SparseMatrix]
    A_sym: Optional[SparseMatrix]
    A_skew: Optional[SparseMatrix]
    projected: LinearOperator   # W^T Z^T A U W
    skew_projected: Optional[LinearOperator]   # W^T N^J W
    Ns: LinearOperator
    Nj: Optional[LinearOperator]
    inner_stop: StopCriteria
    innermost_stop: StopCriteria
    restart: int = 10

    @property
    def m_orth_applied(self):
        return self.Zbar is not None

    @property
    def effective_rank(self):
        return self.Z.effective_rank

    def nnz_counts(self):
        return {
            "nnz_Z": self.Z.nnz,
            "nnz_U": self.U.nnz if self.case is Case.GENERAL else 0,
            "nnz_W": self.W.nnz,
            "nnz_Zbar": self.Zbar.nnz if self.Zbar is not None else 0,
        }


def _projected_parts(case, A, Z, U, A_sym, A_skew):
    """Return (N, Ns, Nj) as implicit operators for the given case."""
    N = compose(Z.T, A, U)
    if case is Case.SYMMETRIC:
        return N, N, None
    if case is Case.GENERALIZED:
        return N, compose(Z.T, A_sym, Z), compose(Z.T, A_skew, Z)
    NT = compose(U.T, A.T, Z)
    return N, scaled(0.5, op_sum(N, NT)), scaled(0.5, op_sum(N, scaled(-1.0, NT)))


def assemble(problem: SaddleProblem, profile="small", m_orth: bool = False,
             shift: float = 0.0, restart: int = 10,
             case: Optional[Case] = None) -> NullspacePreconditioner:
    """Build bases, optional M-orthogonalization and the FSAI factor.

    ``case`` overrides the problem's own label (e.g. to run a generalized
    problem through the general path). ``shift`` adds ``shift * I`` to the
    symmetric projected operator before factorization.

    Raises FactorizationFailed if the projected symmetric part is not
    positive definite.
    """
    prof = get_profile(profile)
    case = problem.case if case is None else Case(case)
    A, B, C = problem.A, problem.B, problem.C
    zb = saroc(B, prof.rho_saroc, prof.tau_saroc)
    if zb.effective_rank < problem.m:
        log.warning("%s: B is rank deficient (detected rank %d < %d)",
                    problem.name, zb.effective_rank, problem.m)
    ub = saroc(C, prof.rho_saroc, prof.tau_saroc) if case is Case.GENERAL else zb
    if ub.dim != zb.dim:
        raise FactorizationFailed(
            f"nullspace dimensions differ: {zb.dim} (B) vs {ub.dim} (C)")
    A_sym = A_skew = None
    if case is Case.GENERALIZED:
        A_sym, A_skew = symmetric_split(A)
    Zbar = None
    basis_Z = zb.Z
    if m_orth and case is not Case.GENERAL and zb.dim > 0:
        M = A if case is Case.SYMMETRIC else A_sym
        try:
            Zbar = mgs_m_orth(zb.Z, M, prof.ortho)
        except NonPositiveNormError as exc:
            raise FactorizationFailed(str(exc)) from exc
        basis_Z = Zbar
    basis_U = basis_Z if case is not Case.GENERAL else ub.Z
    N, Ns, Nj = _projected_parts(case, A, basis_Z, basis_U, A_sym, A_skew)
    Ns_f = op_sum(Ns, shift) if shift else Ns
    try:
        W = fsai(Ns_f, basis_Z.ncols, prof.rho_fsai, prof.tau_fsai)
    except NotPositiveDefiniteError as exc:
        raise FactorizationFailed(f"projected symmetric part not positive definite: {exc}") from exc
    projected = apply_split_preconditioned(N, W)
    skew_projected = apply_split_preconditioned(Nj, W) if Nj is not None else None
    return NullspacePreconditioner(
        case=case, Z=zb, U=ub, W=W, basis_Z=basis_Z, basis_U=basis_U, Zbar=Zbar,
        A_sym=A_sym, A_skew=A_skew, projected=projected, skew_projected=skew_projected,
        Ns=Ns, Nj=Nj,
        inner_stop=StopCriteria(prof.eps_in, 1000),
        innermost_stop=StopCriteria(prof.eps_innermost, 1000),
        restart=restart,
    )


class InnerCounter:
    """Per-solver lists of inner iteration counts, averaged for the report."""

    KEYS = ("lsqr_particular", "cg", "inner_fgmres", "mrs", "lsqr_recover")

    def __init__(self):
        self.counts = defaultdict(list)
        self.max_iter_hits = defaultdict(int)

    def add(self, key, stats):
        self.counts[key].append(stats.iterations)
        if stats.status is krylov.Status.MAX_ITERATIONS:
            self.max_iter_hits[key] += 1

    def averages(self):
        return {k: float(np.mean(self.counts[k])) for k in self.KEYS if self.counts[k]}

    def combined_average(self, *keys):
        vals = [c for k in keys for c in self.counts[k]]
        return float(np.mean(vals)) if vals else 0.0


def apply_preconditioner(prec: NullspacePreconditioner, problem: SaddleProblem,
                         t1, t2, counter: Optional[InnerCounter] = None):
    """Approximately solve ``[[A, B], [-C^T, 0]] [z1; z2] = [t1; t2]``.

    Returns ``(z1, z2, counter)``. Inner solvers that hit their iteration cap
    are recorded but not treated as failures; a CG breakdown raises
    FactorizationFailed.
    """
    if counter is None:
        counter = InnerCounter()
    A, B, C = problem.A, problem.B, problem.C
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)

    # particular solution of -C^T z = t2
    z_hat, st = krylov.lsqr(scaled(-1.0, aslinearoperator(C).T), t2, prec.inner_stop)
    counter.add("lsqr_particular", st)

    Wm = prec.W.W
    rhs = Wm.rmatvec(prec.basis_Z.rmatvec(t1 - A.matvec(z_hat)))
    if prec.case is Case.SYMMETRIC:
        try:
            u_hat, st = krylov.cg(prec.projected, rhs, prec.inner_stop)
        except BreakdownError as exc:
            raise FactorizationFailed(f"inner CG: {exc}") from exc
        counter.add("cg", st)
    else:
        skew = prec.skew_projected
        innermost = prec.innermost_stop

        def shifted_skew_solve(v):
            sol, mst = krylov.mrs(skew, v, innermost)
            counter.add("mrs", mst)
            return sol

        u_hat, st = krylov.fgmres(prec.projected, rhs, shifted_skew_solve,
                                  prec.restart, prec.inner_stop)
        counter.add("inner_fgmres", st)

    z1 = z_hat + prec.basis_U.matvec(Wm.matvec(u_hat))
    z2, st = krylov.lsqr(B, t1 - A.matvec(z1), prec.inner_stop)
    counter.add("lsqr_recover", st)
    return z1, z2, counter


@dataclass
class SolveReport:
    outer_iterations: int = 0
    avg_inner: dict = field(default_factory=dict)
    nnz_Z: int = 0
    nnz_U: int = 0
    nnz_W: int = 0
    nnz_Zbar: int = 0
    final_true_relative_residual: float = float("nan")
    status: ReportStatus = ReportStatus.CONVERGED
    residual_history: list = field(default_factory=list)
    solver_relative_residual: float = float("nan")
    effective_rank: Optional[int] = None
    avg_lsqr: float = 0.0
    inner_max_iter_hits: dict = field(default_factory=dict)
    message: str = ""

    @property
    def nnz_total(self):
        return self.nnz_Z + self.nnz_U + self.nnz_W + self.nnz_Zbar


def solve(problem: SaddleProblem, profile="small", m_orth: bool = False,
          outer_stop: StopCriteria = StopCriteria(1e-5, 1000), restart: int = 10,
          shift: float = 0.0, case: Optional[Case] = None):
    """Solve the saddle system with the nested scheme.

    Returns ``(x, y, report)``. The report's residual is recomputed from the
    original blocks after the outer solver returns.
    """
    n, m = problem.n, problem.m
    report = SolveReport()
    x, y = np.zeros(n), np.zeros(m)
    rhs = problem.rhs
    if not np.any(rhs):
        report.final_true_relative_residual = 0.0
        report.solver_relative_residual = 0.0
        report.residual_history = [0.0]
        return x, y, report
    try:
        prec = assemble(problem, profile, m_orth, shift=shift, restart=restart, case=case)
    except FactorizationFailed as exc:
        report.status = ReportStatus.FACTORIZATION_FAILED
        report.message = str(exc)
        report.final_true_relative_residual = problem.true_relative_residual(x, y)
        return x, y, report
    except MemoryError as exc:
        report.status = ReportStatus.RESOURCE_EXHAUSTED
        report.message = f"out of memory during assembly: {exc}"
        report.final_true_relative_residual = problem.true_relative_residual(x, y)
        return x, y, report
    report.__dict__.update(prec.nnz_counts())
    report.effective_rank = prec.effective_rank
    counter = InnerCounter()

    def precond(v):
        z1, z2, _ = apply_preconditioner(prec, problem, v[:n], v[n:], counter)
        return np.concatenate((z1, z2))

    try:
        sol, st = krylov.fgmres(problem.operator(), rhs, precond, restart, outer_stop)
    except FactorizationFailed as exc:
        report.status = ReportStatus.FACTORIZATION_FAILED
        report.message = str(exc)
        report.final_true_relative_residual = problem.true_relative_residual(x, y)
        report.avg_inner = counter.averages()
        return x, y, report
    except MemoryError as exc:
        report.status = ReportStatus.RESOURCE_EXHAUSTED
        report.message = f"out of memory during iteration: {exc}"
        report.final_true_relative_residual = problem.true_relative_residual(x, y)
        return x, y, report
    x, y = sol[:n], sol[n:]
    report.outer_iterations = st.iterations
    report.residual_history = list(st.residual_history)
    report.solver_relative_residual = st.final_relative_residual
    report.avg_inner = counter.averages()
    report.avg_lsqr = counter.combined_average("lsqr_particular", "lsqr_recover")
    report.inner_max_iter_hits = dict(counter.max_iter_hits)
    true_rel = problem.true_relative_residual(x, y)
    report.final_true_relative_residual = true_rel
    if st.status is krylov.Status.MAX_ITERATIONS:
        report.status = ReportStatus.MAX_ITERATIONS
    elif true_rel > outer_stop.rel_tol:
        report.status = ReportStatus.TRUE_RESIDUAL_ABOVE_TOL
    else:
        report.status = ReportStatus.CONVERGED
    return x, y, report


def baseline_gmres(problem: SaddleProblem, outer_stop: StopCriteria = StopCriteria(1e-5, 1000),
                   restart: int = 10):
    """Unpreconditioned GMRES(m) on the full saddle operator, for comparison."""
    n = problem.n
    sol, st = krylov.gmres(problem.operator(), problem.rhs, restart, outer_stop)
    report = SolveReport(outer_iterations=st.iterations,
                         residual_history=list(st.residual_history),
                         solver_relative_residual=st.final_relative_residual)
    report.final_true_relative_residual = problem.true_relative_residual(sol[:n], sol[n:])
    if st.status is krylov.Status.MAX_ITERATIONS:
        report.status = ReportStatus.MAX_ITERATIONS
    elif report.final_true_relative_residual > outer_stop.rel_tol:
        report.status = ReportStatus.TRUE_RESIDUAL_ABOVE_TOL
    return sol[:n], sol[n:], report


def with_case(problem: SaddleProblem, case) -> SaddleProblem:
    """Copy of ``problem`` relabelled (validated) as ``case``."""
    return replace(problem, case=Case(case))
