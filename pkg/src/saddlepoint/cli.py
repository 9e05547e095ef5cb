"""Command line interface: ``saddlepoint {solve,gen-random,fetch,bench,validate}``.

Exit codes: 0 success, 1 usage or input error, 2 a failed entry under
``--strict``.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import corpus, report
from .corpus import CorpusEntry, RandomSaddleSpec
from .scheme import PROFILES, Case, ReportStatus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _profile_choices():
    return sorted(PROFILES) + ["exact"]


def build_parser():
    p = _Parser(prog="saddlepoint", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one problem and write its report row")
    s.add_argument("source", help="square saddle .mtx file or a manifest")
    s.add_argument("--entry", help="manifest entry to solve (default: the only/first entry)")
    s.add_argument("--n", type=int, help="size of the A block (default: from manifest or inferred)")
    s.add_argument("--m", type=int, help="number of constraints")
    s.add_argument("--profile", choices=_profile_choices(), default="small")
    s.add_argument("--case", choices=["auto"] + [c.value for c in Case], default="auto")
    s.add_argument("--m-orth", action="store_true", help="M-orthogonalize the nullspace basis")
    s.add_argument("--tol", type=float, default=1e-5)
    s.add_argument("--max-outer", type=int, default=1000)
    s.add_argument("--restart", type=int, default=10)
    s.add_argument("--seed", type=int, default=0, help="seed for random manifest entries")
    s.add_argument("--baseline", action="store_true", help="also run unpreconditioned GMRES")
    s.add_argument("--cache", type=Path)
    s.add_argument("--base-url")
    s.add_argument("--out", type=Path, help="directory for the report files")
    s.add_argument("--strict", action="store_true", help="exit 2 unless converged")

    g = sub.add_parser("gen-random", help="write a random saddle problem as Matrix Market files")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--density", type=float, default=0.01)
    g.add_argument("--xi", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name")
    g.add_argument("--out", type=Path, default=Path("."))

    f = sub.add_parser("fetch", help="download a SuiteSparse matrix into the cache")
    f.add_argument("--group", required=True)
    f.add_argument("--name", required=True)
    f.add_argument("--base-url")
    f.add_argument("--cache", type=Path)

    b = sub.add_parser("bench", help="run a benchmark configuration")
    b.add_argument("--config", type=Path, required=True)
    b.add_argument("--out", type=Path, help="override output_dir")
    b.add_argument("--workers", type=int)
    b.add_argument("--strict", action="store_true", help="exit 2 if any entry did not converge")
    b.add_argument("--table", default="outer_iters",
                   help="CSV column to print as a problem x profile table")

    v = sub.add_parser("validate", help="parse a matrix and check its saddle structure")
    v.add_argument("matrix", type=Path)
    v.add_argument("--n", type=int)
    v.add_argument("--m", type=int)
    return p


def _select_entry(args):
    src = Path(args.source)
    if not src.exists():
        raise UsageError(f"no such file: {src}")
    if src.suffix.lower() == ".mtx":
        n, m = args.n, args.m
        if (n is None) != (m is None):
            raise UsageError("give both --n and --m or neither")
        return CorpusEntry(name=src.stem, source="file", n=n, m=m, path=src)
    entries = corpus.read_manifest(src)
    if not entries:
        raise UsageError(f"manifest {src} has no entries")
    if args.entry:
        match = [e for e in entries if e.name == args.entry]
        if not match:
            raise UsageError(f"manifest has no entry named {args.entry!r}")
        entry = match[0]
    else:
        entry = entries[0]
    if args.n is not None or args.m is not None:
        entry.n, entry.m = args.n, args.m
    return entry


def cmd_solve(args):
    entry = _select_entry(args)
    if args.case != "auto":
        entry.case_hint = args.case
    config = report.RunConfig(
        entries=[entry], profiles=[args.profile], outer_tol=args.tol,
        max_outer=args.max_outer, restart=args.restart, m_orth=args.m_orth,
        seed=args.seed, baseline=args.baseline, cache_dir=args.cache,
        base_url=args.base_url, output_dir=args.out or Path("."))
    try:
        config.validate()
    except report.ConfigError as exc:
        raise UsageError(str(exc)) from None
    rec = report.run_one(entry, args.profile, config)
    if rec["status"] == report.ERROR_STATUS:
        print(f"{entry.name}: error: {rec['message']}", file=sys.stderr)
        if args.out:
            report.write_reports([rec], args.out, args.baseline, stem=entry.name)
        return EXIT_FAILED if args.strict else EXIT_USAGE
    status = ReportStatus(rec["status"])
    line = (f"{entry.name} case={rec['case']} profile={args.profile} "
            f"status={status.name}{status.marker} outer_iters={rec['outer_iters']} "
            f"true_rel_residual={rec['true_rel_residual']:.3e} nnz={rec['nnz_total']}")
    if args.baseline:
        line += (f" baseline_iters={rec['baseline_iters']} "
                 f"baseline_residual={rec['baseline_true_rel_residual']:.3e}")
    print(line)
    if args.out:
        report.write_reports([rec], args.out, args.baseline, stem=entry.name)
    if args.strict and status is not ReportStatus.CONVERGED:
        return EXIT_FAILED
    return EXIT_OK


def cmd_gen_random(args):
    try:
        spec = RandomSaddleSpec(args.n, args.m, args.density, args.xi, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    name = args.name or f"random_n{args.n}_m{args.m}_s{args.seed}"
    prob = corpus.gen_random_saddle(spec, name=name)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for key, mat in (("A", prob.A), ("B", prob.B), ("C", prob.C)):
        paths[key] = out / f"{name}_{key}.mtx"
        corpus.write_matrix_market(mat, paths[key])
    for key, vec in (("f", prob.f), ("g", prob.g)):
        paths[key] = out / f"{name}_{key}.mtx"
        corpus.write_vector(vec, paths[key])
    entry = CorpusEntry(name=name, source="blocks", n=args.n, m=args.m,
                        case_hint=Case.GENERAL.value, blocks=paths)
    manifest = out / f"{name}.manifest"
    manifest.write_text(
        f"# random saddle problem: n={args.n} m={args.m} density={args.density!r} "
        f"xi={args.xi!r} seed={args.seed}\n" + corpus.format_entry(entry, out) + "\n")
    nnz = prob.A.nnz + prob.B.nnz + prob.C.nnz
    print(f"wrote {name}: n={args.n} m={args.m} nnz(A)+nnz(B)+nnz(C)={nnz} -> {manifest}")
    return EXIT_OK


def cmd_fetch(args):
    try:
        path = corpus.fetch_suitesparse(args.group, args.name, args.cache, args.base_url)
    except corpus.FetchError as exc:
        print(f"fetch failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(path)
    return EXIT_OK


def cmd_bench(args):
    if not args.config.exists():
        raise UsageError(f"no such config: {args.config}")
    try:
        config = report.read_config(args.config)
    except report.ConfigError as exc:
        raise UsageError(str(exc)) from None
    if args.out is not None:
        config.output_dir = args.out
    if args.workers is not None:
        config.workers = args.workers
    records, paths = report.run_benchmark(config)
    print(report.format_table(records, args.table))
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    bad = [r for r in records if r.get("status") != ReportStatus.CONVERGED.value]
    if args.strict and bad:
        return EXIT_FAILED
    return EXIT_OK


def cmd_validate(args):
    if not args.matrix.exists():
        raise UsageError(f"no such file: {args.matrix}")
    try:
        W = corpus.read_matrix_market(args.matrix)
    except corpus.MatrixMarketError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{args.matrix}: {W.nrows} x {W.ncols}, nnz={W.nnz}")
    if W.nrows != W.ncols:
        print("not square: no saddle partition")
        return EXIT_OK
    if args.n is not None and args.m is not None:
        n, m = args.n, args.m
        if n + m != W.nrows:
            raise UsageError(f"n + m = {n + m} does not match order {W.nrows}")
        source = "given"
    else:
        try:
            n, m = corpus.infer_partition(W)
        except ValueError as exc:
            print(f"partition: {exc}")
            return EXIT_OK
        source = "inferred"
    D = W.submatrix(slice(n, n + m), slice(n, n + m))
    print(f"partition ({source}): n={n} m={m}; (2,2) block nnz={D.nnz}"
          + (" (nonzero: would be discarded)" if D.nnz else " (zero)"))
    A, B, C = corpus.partition_saddle(W, n, m) if not D.nnz else (None, None, None)
    if A is not None:
        case = corpus.SaddleProblem.from_blocks(A, B, C).case
        print(f"case: {case.value}; nnz(A)={A.nnz} nnz(B)={B.nnz} nnz(C)={C.nnz}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "gen-random": cmd_gen_random,
    "fetch": cmd_fetch,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"saddlepoint {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
