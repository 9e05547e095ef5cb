"""Batch runs over (problem x profile) and the report files they produce."""
import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .corpus import CorpusEntry, load_entry, parse_entry, read_manifest
from .krylov import StopCriteria
from .scheme import PROFILES, ReportStatus, baseline_gmres, get_profile, solve

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "problem", "case", "profile", "m_orth", "outer_iters", "status", "true_rel_residual",
    "nnz_Z", "nnz_U", "nnz_W", "nnz_Zbar", "avg_lsqr", "avg_cg", "avg_inner_fgmres", "avg_mrs",
    "marker", "eps_in", "eps_innermost", "nnz_total", "effective_rank", "message",
]
BASELINE_COLUMNS = ["baseline_iters", "baseline_status", "baseline_true_rel_residual"]
ERROR_STATUS = "error"


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    entries: list
    profiles: list = field(default_factory=lambda: ["small"])
    m_orth: bool = False
    outer_tol: float = 1e-5
    max_outer: int = 1000
    restart: int = 10
    output_dir: Path = Path("results")
    seed: int = 0           # for random entries that do not set their own
    baseline: bool = False
    workers: int = 1
    cache_dir: Optional[Path] = None
    base_url: Optional[str] = None

    def validate(self):
        if not self.entries:
            raise ConfigError("configuration lists no entries")
        if not self.profiles:
            raise ConfigError("configuration lists no profiles")
        for p in self.profiles:
            if p not in PROFILES and p != "exact":
                raise ConfigError(f"unknown profile {p!r}")
        if self.restart < 1 or self.max_outer < 1 or not self.outer_tol > 0:
            raise ConfigError("restart, max_outer and outer_tol must be positive")
        return self


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config(path) -> RunConfig:
    """Parse a ``key = value`` config file.

    Recognised keys: ``entry`` (an inline manifest line, repeatable),
    ``manifest`` (a manifest file, repeatable), ``select`` (comma-separated
    names to keep), ``profiles``, ``m_orth``, ``outer_tol``, ``max_outer``,
    ``restart``, ``output_dir``, ``seed``, ``baseline``, ``workers``,
    ``cache_dir``, ``base_url``. Relative paths resolve against the config
    file's directory.
    """
    path = Path(path)
    base = path.parent
    entries = []
    opts = {}
    select = None
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "entry":
                entries.append(parse_entry(value, base))
            elif key == "manifest":
                entries.extend(read_manifest(base / value))
            elif key == "select":
                select = [s.strip() for s in value.split(",") if s.strip()]
            elif key == "profiles":
                opts["profiles"] = [s.strip() for s in value.split(",") if s.strip()]
            elif key in ("m_orth", "baseline"):
                opts[key] = _bool(value)
            elif key == "outer_tol":
                opts[key] = float(value)
            elif key in ("max_outer", "restart", "seed", "workers"):
                opts[key] = int(value)
            elif key in ("output_dir", "cache_dir"):
                opts[key] = base / value
            elif key == "base_url":
                opts[key] = value
            else:
                raise ConfigError(f"unknown key {key!r}")
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    if select is not None:
        wanted = set(select)
        entries = [e for e in entries if e.name in wanted]
    return RunConfig(entries=entries, **opts).validate()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "1" if value else "0"
    return "" if value is None else str(value)


def resolve_entry(entry: CorpusEntry, config: RunConfig) -> CorpusEntry:
    """Random entries without their own seed take the config seed."""
    if entry.source == "random" and not entry.seed_given:
        return replace(entry, random=replace(entry.random, seed=config.seed))
    return entry


def run_one(entry: CorpusEntry, profile: str, config: RunConfig):
    """Solve one (entry, profile) pair and return a result record (plain dict)."""
    prof = get_profile(profile)
    rec = {
        "problem": entry.name, "case": entry.case_hint or "", "profile": profile,
        "m_orth": config.m_orth, "eps_in": prof.eps_in, "eps_innermost": prof.eps_innermost,
    }
    entry = resolve_entry(entry, config)
    try:
        problem = load_entry(entry, config.cache_dir, config.base_url)
    except Exception as exc:  # recorded in the report, the batch goes on
        rec.update(status=ERROR_STATUS, marker="", message=f"{type(exc).__name__}: {exc}",
                   residual_history=[])
        return rec
    stop = StopCriteria(config.outer_tol, config.max_outer)
    try:
        _, _, rep = solve(problem, prof, config.m_orth, stop, config.restart)
    except Exception as exc:
        rec.update(case=problem.case.value, status=ERROR_STATUS, marker="",
                   message=f"{type(exc).__name__}: {exc}", residual_history=[])
        return rec
    avg = rep.avg_inner
    rec.update(
        case=problem.case.value, outer_iters=rep.outer_iterations, status=rep.status.value,
        marker=rep.status.marker, true_rel_residual=rep.final_true_relative_residual,
        nnz_Z=rep.nnz_Z, nnz_U=rep.nnz_U, nnz_W=rep.nnz_W, nnz_Zbar=rep.nnz_Zbar,
        nnz_total=rep.nnz_total, avg_lsqr=rep.avg_lsqr, avg_cg=avg.get("cg", 0.0),
        avg_inner_fgmres=avg.get("inner_fgmres", 0.0), avg_mrs=avg.get("mrs", 0.0),
        effective_rank=rep.effective_rank, message=rep.message,
        residual_history=[float(v) for v in rep.residual_history],
    )
    if config.baseline:
        _, _, base = baseline_gmres(problem, stop, config.restart)
        rec.update(baseline_iters=base.outer_iterations, baseline_status=base.status.value,
                   baseline_true_rel_residual=base.final_true_relative_residual,
                   baseline_residual_history=[float(v) for v in base.residual_history])
    return rec


def _run_job(args):
    return run_one(*args)


def run_records(config: RunConfig):
    """All (entry x profile) records, in entry order then profile order."""
    config.validate()
    jobs = [(e, p, config) for e in config.entries for p in config.profiles]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_job, jobs))
    return [_run_job(j) for j in jobs]


def records_to_csv(records, baseline=False) -> str:
    cols = CSV_COLUMNS + (BASELINE_COLUMNS if baseline else [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        writer.writerow([_fmt(rec.get(c)) for c in cols])
    return buf.getvalue()


def residuals_csv(records, baseline=False) -> str:
    cols = ["problem", "case", "profile", "m_orth", "true_rel_residual"]
    if baseline:
        cols.append("baseline_true_rel_residual")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        writer.writerow([_fmt(rec.get(c)) for c in cols])
    return buf.getvalue()


def histories_json(records) -> str:
    runs = []
    for rec in records:
        item = {k: rec.get(k) for k in ("problem", "case", "profile", "m_orth", "status")}
        item["residual_history"] = rec.get("residual_history", [])
        if "baseline_residual_history" in rec:
            item["baseline_residual_history"] = rec["baseline_residual_history"]
        runs.append(item)
    return json.dumps({"runs": runs}, indent=1, sort_keys=True) + "\n"


def write_reports(records, output_dir, baseline=False, stem="results"):
    """Write ``{stem}.csv``, ``{stem}_histories.json`` and ``{stem}_true_residuals.csv``."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / f"{stem}.csv",
        "json": out / f"{stem}_histories.json",
        "residuals": out / f"{stem}_true_residuals.csv",
    }
    paths["csv"].write_text(records_to_csv(records, baseline))
    paths["json"].write_text(histories_json(records))
    paths["residuals"].write_text(residuals_csv(records, baseline))
    return paths


def run_benchmark(config: RunConfig):
    """Run every (entry x profile) pair and write the report files.

    Returns ``(records, paths)``.
    """
    records = run_records(config)
    paths = write_reports(records, config.output_dir, config.baseline)
    return records, paths


def _cell(rec, column):
    status = rec.get("status")
    if status == ERROR_STATUS:
        return "error"
    if status in (ReportStatus.MAX_ITERATIONS.value, ReportStatus.FACTORIZATION_FAILED.value,
                  ReportStatus.RESOURCE_EXHAUSTED.value):
        return rec.get("marker", "?")
    val = rec.get(column)
    text = f"{val:.1f}" if isinstance(val, float) else str(val)
    if status == ReportStatus.TRUE_RESIDUAL_ABOVE_TOL.value:
        text += rec.get("marker", "")
    return text


def format_table(records, column="outer_iters") -> str:
    """Plain-text table: problems as rows (input order), profiles as columns."""
    problems = list(dict.fromkeys(r["problem"] for r in records))
    profiles = list(dict.fromkeys(r["profile"] for r in records))
    by_key = {(r["problem"], r["profile"]): r for r in records}
    header = ["#", "problem"] + profiles
    rows = []
    for i, prob in enumerate(problems, 1):
        cells = [str(i), prob]
        for p in profiles:
            rec = by_key.get((prob, p))
            cells.append(_cell(rec, column) if rec else "")
        rows.append(cells)
    widths = [max(len(r[k]) for r in [header] + rows) for k in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)
