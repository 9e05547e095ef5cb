"""Nullspace preconditioners for sparse saddle point systems.

Typical use::

    from saddlepoint import SaddleProblem, solve
    problem = SaddleProblem.from_blocks(A, B, C)
    x, y, report = solve(problem, profile="small")
"""
from .corpus import (CorpusEntry, RandomSaddleSpec, fetch_suitesparse, gen_random_saddle,
                     read_manifest, read_matrix_market, write_matrix_market)
from .fsai import FsaiFactor, NotPositiveDefiniteError, fsai
from .krylov import BreakdownError, SolverStats, Status, StopCriteria, cg, fgmres, gmres, lsqr, mrs
from .nullspace import NonPositiveNormError, NullspaceBasis, OrthoParams, mgs_m_orth, saroc
from .operators import LinearOperator, aslinearoperator
from .scheme import (PROFILES, Case, FactorizationFailed, NullspacePreconditioner, ReportStatus,
                     SaddleProblem, SolveReport, ToleranceProfile, apply_preconditioner,
                     assemble, baseline_gmres, get_profile, solve)
from .sparse import DimensionError, SparseMatrix, SparseVector

__version__ = "0.1.0"

__all__ = [
    "BreakdownError", "Case", "CorpusEntry", "DimensionError", "FactorizationFailed",
    "FsaiFactor", "LinearOperator", "NonPositiveNormError", "NotPositiveDefiniteError",
    "NullspaceBasis", "NullspacePreconditioner", "OrthoParams", "PROFILES", "RandomSaddleSpec",
    "ReportStatus", "SaddleProblem", "SolveReport", "SolverStats", "SparseMatrix",
    "SparseVector", "Status", "StopCriteria", "ToleranceProfile", "apply_preconditioner",
    "aslinearoperator", "assemble", "baseline_gmres", "cg", "fetch_suitesparse", "fgmres",
    "fsai", "gen_random_saddle", "get_profile", "gmres", "lsqr", "mgs_m_orth", "mrs",
    "read_manifest", "read_matrix_market", "saroc", "solve", "write_matrix_market",
]
