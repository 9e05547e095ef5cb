"""Test-problem acquisition: Matrix Market IO, saddle partitioning, the
random generator, manifests and a cached SuiteSparse fetcher."""
import io
import os
import shlex
import tarfile
import tempfile
import urllib.error
import urllib.request
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .scheme import Case, SaddleProblem, make_rhs
from .sparse import DimensionError, SparseMatrix

CACHE_ENV = "SADDLEPOINT_CACHE"
BASE_URL_ENV = "SADDLEPOINT_SUITESPARSE_URL"
DEFAULT_BASE_URL = "https://sparse.tamu.edu/MM"


# ---------------------------------------------------------------------------
# Matrix Market


class MatrixMarketError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line


def read_matrix_market(path) -> SparseMatrix:
    """Parse a real coordinate Matrix Market file.

    Symmetric and skew-symmetric storage is expanded, duplicates are summed
    and explicit zeros dropped.
    """
    path = Path(path)
    with open(path, "r") as fh:
        return _parse_mm(fh, path)


def _parse_mm(fh, path=None) -> SparseMatrix:
    header = fh.readline()
    lineno = 1
    tokens = header.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing or malformed %%MatrixMarket header", path, 1)
    obj, fmt, fld, sym = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", path, 1)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r} (coordinate only)", path, 1)
    if fld != "real":
        raise MatrixMarketError(f"unsupported field {fld!r} (real only)", path, 1)
    if sym not in ("general", "symmetric", "skew-symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {sym!r}", path, 1)
    size_line = None
    for line in fh:
        lineno += 1
        s = line.strip()
        if s and not s.startswith("%"):
            size_line = s
            break
    if size_line is None:
        raise MatrixMarketError("missing size line", path, lineno)
    try:
        nrows, ncols, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(f"bad size line {size_line!r}", path, lineno) from None
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for line in fh:
        lineno += 1
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {s!r}", path, lineno)
        if k >= nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", path, lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"unparsable entry {s!r}", path, lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(f"index ({i}, {j}) out of bounds for {nrows}x{ncols}",
                                    path, lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {k}", path, lineno)
    if sym != "general":
        if nrows != ncols:
            raise MatrixMarketError(f"{sym} storage needs a square matrix", path, 1)
        off = rows != cols
        if sym == "skew-symmetric" and np.any(~off & (vals != 0)):
            raise MatrixMarketError("skew-symmetric matrix with nonzero diagonal", path)
        sign = 1.0 if sym == "symmetric" else -1.0
        rows, cols, vals = (np.concatenate((rows, cols[off])),
                            np.concatenate((cols, rows[off])),
                            np.concatenate((vals, sign * vals[off])))
    return SparseMatrix.from_triplets(nrows, ncols, rows, cols, vals)


def write_matrix_market(matrix: SparseMatrix, path, comment: Optional[str] = None):
    """Write ``matrix`` as coordinate/real/general with round-trip precision."""
    rows, cols, vals = matrix.triplets()
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real general\n")
    if comment:
        for line in comment.splitlines():
            buf.write(f"% {line}\n")
    buf.write(f"{matrix.nrows} {matrix.ncols} {matrix.nnz}\n")
    for i, j, v in zip(rows + 1, cols + 1, vals):
        buf.write(f"{i} {j} {v:.17g}\n")
    Path(path).write_text(buf.getvalue())


def write_vector(vec, path):
    vec = np.asarray(vec, dtype=np.float64)
    write_matrix_market(SparseMatrix.from_dense(vec.reshape(-1, 1)), path)


def read_vector(path):
    mat = read_matrix_market(path)
    if mat.ncols != 1:
        raise MatrixMarketError(f"expected a single column, got {mat.shape}", path)
    return mat.dense_column(0)


# ---------------------------------------------------------------------------
# saddle partitioning and generation


def partition_saddle(W: SparseMatrix, n: int, m: int):
    """Split a square saddle matrix into ``(A, B, C)``.

    ``W = [[A, B], [-C^T, D]]``; a nonzero ``D`` is reported with a warning
    and discarded.
    """
    if W.nrows != W.ncols or W.nrows != n + m:
        raise DimensionError(f"matrix of shape {W.shape} cannot be split as n={n}, m={m}")
    A = W.submatrix(slice(0, n), slice(0, n))
    B = W.submatrix(slice(0, n), slice(n, n + m))
    C = W.submatrix(slice(n, n + m), slice(0, n)).T.scaled(-1.0)
    D = W.submatrix(slice(n, n + m), slice(n, n + m))
    if D.nnz:
        warnings.warn(f"(2,2) block has {D.nnz} nonzeros; they are discarded", stacklevel=2)
    return A, B, C


def assemble_saddle(A: SparseMatrix, B: SparseMatrix, C: SparseMatrix) -> SparseMatrix:
    """Inverse of ``partition_saddle``: the square matrix ``[[A, B], [-C^T, 0]]``."""
    n, m = B.shape
    ra, ca, va = A.triplets()
    rb, cb, vb = B.triplets()
    rc, cc, vc = C.T.triplets()
    return SparseMatrix.from_triplets(
        n + m, n + m,
        np.concatenate((ra, rb, rc + n)),
        np.concatenate((ca, cb + n, cc)),
        np.concatenate((va, vb, -vc)))


def infer_partition(W: SparseMatrix):
    """Largest ``m <= order/2`` whose trailing ``m x m`` block is empty."""
    order = W.nrows
    r, c, _ = W.triplets()
    # an entry lies in the trailing cand x cand block iff min(row, col) >= order - cand
    first_nonzero = np.minimum(r, c)
    m = 0
    for cand in range(order // 2, 0, -1):
        if not np.any(first_nonzero >= order - cand):
            m = cand
            break
    if m == 0:
        raise DimensionError("could not find a zero trailing block; give n and m explicitly")
    return order - m, m


@dataclass(frozen=True)
class RandomSaddleSpec:
    n: int
    m: int
    density: float = 0.01
    xi: float = 0.1
    seed: int = 0

    def __post_init__(self):
        # density 0 is accepted: it yields the bare perturbation blocks
        if not 0 <= self.density <= 1:
            raise ValueError("density must lie in [0, 1]")
        if self.m > self.n or self.m < 1:
            raise ValueError("need 1 <= m <= n")


def _random_block(rng, nrows, ncols, density):
    mask = rng.random((nrows, ncols)) < density
    vals = rng.random((nrows, ncols))
    r, c = np.nonzero(mask)
    return r, c, vals[r, c]


def gen_random_saddle(spec: RandomSaddleSpec, name=None) -> SaddleProblem:
    """``A = xi I + R``, ``B = xi [I 0]^T + R``, ``C^T = xi [I 0] + R``.

    Each ``R`` keeps every entry independently with probability ``density``
    and draws its value uniformly from [0, 1).
    """
    n, m, xi = spec.n, spec.m, spec.xi
    rng = np.random.default_rng(spec.seed)
    ra, ca, va = _random_block(rng, n, n, spec.density)
    rb, cb, vb = _random_block(rng, n, m, spec.density)
    rct, cct, vct = _random_block(rng, m, n, spec.density)
    diag_n = np.arange(n)
    diag_m = np.arange(m)
    A = SparseMatrix.from_triplets(n, n, np.concatenate((ra, diag_n)),
                                   np.concatenate((ca, diag_n)),
                                   np.concatenate((va, np.full(n, xi))))
    B = SparseMatrix.from_triplets(n, m, np.concatenate((rb, diag_m)),
                                   np.concatenate((cb, diag_m)),
                                   np.concatenate((vb, np.full(m, xi))))
    # C^T is generated as an m x n block; store C
    C = SparseMatrix.from_triplets(n, m, np.concatenate((cct, diag_m)),
                                   np.concatenate((rct, diag_m)),
                                   np.concatenate((vct, np.full(m, xi))))
    f, g = make_rhs(A, B, C)
    label = name or f"random_n{n}_m{m}_s{spec.seed}"
    return SaddleProblem(A, B, C, f, g, Case.GENERAL, label)


# ---------------------------------------------------------------------------
# manifests


@dataclass
class CorpusEntry:
    """One benchmark problem.

    ``source`` is ``file`` (a square saddle matrix at ``path``),
    ``suitesparse`` (``group``/``name`` in the collection), ``random``
    (a RandomSaddleSpec) or ``blocks`` (separate A/B/C/f/g files).
    """

    name: str
    source: str
    n: Optional[int] = None
    m: Optional[int] = None
    case_hint: Optional[str] = None
    path: Optional[Path] = None
    group: Optional[str] = None
    random: Optional[RandomSaddleSpec] = None
    blocks: dict = field(default_factory=dict)
    seed_given: bool = True

    @property
    def partition(self):
        if self.n is None or self.m is None:
            return None
        return (self.n, self.m)


_SOURCES = ("file", "suitesparse", "random", "blocks")


def parse_entry(line: str, base_dir=None) -> CorpusEntry:
    """Parse ``key=value`` tokens (shell quoting allowed) into a CorpusEntry."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    kv = {}
    for tok in shlex.split(line, comments=True):
        if "=" not in tok:
            raise ValueError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        kv[k.strip()] = v.strip()
    if "name" not in kv:
        raise ValueError(f"entry without a name: {line!r}")
    source = kv.get("source")
    if source is None:
        source = "suitesparse" if "group" in kv else "file"
    if source not in _SOURCES:
        raise ValueError(f"unknown source {source!r}")
    n = int(kv["n"]) if "n" in kv else None
    m = int(kv["m"]) if "m" in kv else None
    case = kv.get("case")
    if case not in (None, "auto") and case not in {c.value for c in Case}:
        raise ValueError(f"unknown case {case!r}")
    entry = CorpusEntry(name=kv["name"], source=source, n=n, m=m, case_hint=case,
                        group=kv.get("group"))
    if source == "file":
        entry.path = base_dir / kv.get("path", f"{entry.name}.mtx")
    elif source == "random":
        entry.random = RandomSaddleSpec(n=n, m=m, density=float(kv.get("density", 0.01)),
                                        xi=float(kv.get("xi", 0.1)), seed=int(kv.get("seed", 0)))
        entry.seed_given = "seed" in kv
    elif source == "blocks":
        for key in ("A", "B", "C", "f", "g"):
            if key in kv:
                entry.blocks[key] = base_dir / kv[key]
        if "A" not in entry.blocks or "B" not in entry.blocks:
            raise ValueError(f"blocks entry {entry.name!r} needs at least A and B")
    elif source == "suitesparse" and not entry.group:
        raise ValueError(f"suitesparse entry {entry.name!r} needs a group")
    return entry


def read_manifest(path) -> list:
    """One entry per non-blank, non-comment line."""
    path = Path(path)
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            entries.append(parse_entry(s, path.parent))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return entries


def format_entry(entry: CorpusEntry, base_dir=None) -> str:
    def rel(p):
        p = Path(p)
        if base_dir is not None:
            try:
                return str(p.resolve().relative_to(Path(base_dir).resolve()))
            except ValueError:
                pass
        return str(p)

    toks = [f"name={entry.name}", f"source={entry.source}"]
    if entry.group:
        toks.append(f"group={entry.group}")
    if entry.n is not None:
        toks.append(f"n={entry.n}")
    if entry.m is not None:
        toks.append(f"m={entry.m}")
    if entry.case_hint:
        toks.append(f"case={entry.case_hint}")
    if entry.path is not None:
        toks.append(f"path={shlex.quote(rel(entry.path))}")
    if entry.random is not None:
        r = entry.random
        toks += [f"density={r.density!r}", f"xi={r.xi!r}"]
        if entry.seed_given:
            toks.append(f"seed={r.seed}")
    for k, p in entry.blocks.items():
        toks.append(f"{k}={shlex.quote(rel(p))}")
    return " ".join(toks)


def bundled_manifest_path() -> Path:
    return Path(__file__).with_name("data") / "paper_problems.manifest"


def load_entry(entry: CorpusEntry, cache_dir=None, base_url=None) -> SaddleProblem:
    """Materialize a CorpusEntry as a SaddleProblem (fetching if needed)."""
    case = entry.case_hint if entry.case_hint not in (None, "auto") else None
    if entry.source == "random":
        prob = gen_random_saddle(entry.random, name=entry.name)
        return prob if case is None else SaddleProblem.from_blocks(
            prob.A, prob.B, prob.C, prob.f, prob.g, case, entry.name)
    if entry.source == "blocks":
        A = read_matrix_market(entry.blocks["A"])
        B = read_matrix_market(entry.blocks["B"])
        C = read_matrix_market(entry.blocks["C"]) if "C" in entry.blocks else B
        f = read_vector(entry.blocks["f"]) if "f" in entry.blocks else None
        g = read_vector(entry.blocks["g"]) if "g" in entry.blocks else None
        return SaddleProblem.from_blocks(A, B, C, f, g, case, entry.name)
    if entry.source == "suitesparse":
        path = fetch_suitesparse(entry.group, entry.name, cache_dir, base_url)
    else:
        path = entry.path
    W = read_matrix_market(path)
    n, m = entry.partition if entry.partition else infer_partition(W)
    A, B, C = partition_saddle(W, n, m)
    return SaddleProblem.from_blocks(A, B, C, case=case, name=entry.name)


# ---------------------------------------------------------------------------
# SuiteSparse fetcher


class FetchError(RuntimeError):
    def __init__(self, message, url):
        super().__init__(f"{message} [{url}]")
        self.url = url


class NetworkError(FetchError):
    pass


class HTTPStatusError(FetchError):
    def __init__(self, status, url):
        super().__init__(f"HTTP status {status}", url)
        self.status = status


class ArchiveError(FetchError):
    pass


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "saddlepoint"


def cached_path(group, name, cache_dir=None) -> Path:
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return cache_dir / group / name / f"{name}.mtx"


def fetch_suitesparse(group: str, name: str, cache_dir=None, base_url=None,
                      timeout: float = 60.0) -> Path:
    """Return the local path of ``group/name``, downloading it on a cache miss.

    The archive ``{base_url}/{group}/{name}.tar.gz`` is unpacked and its
    ``name.mtx`` stored atomically under ``cache_dir/group/name/``.
    """
    target = cached_path(group, name, cache_dir)
    if target.exists():
        return target
    base_url = base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL
    url = f"{base_url.rstrip('/')}/{group}/{name}.tar.gz"
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            status = getattr(resp, "status", None)
            if status is not None and status >= 400:
                raise HTTPStatusError(status, url)
            payload = resp.read()
    except urllib.error.HTTPError as exc:
        raise HTTPStatusError(exc.code, url) from exc
    except urllib.error.URLError as exc:
        reason = exc.reason
        if isinstance(reason, FileNotFoundError):
            raise HTTPStatusError(404, url) from exc
        raise NetworkError(f"download failed: {reason}", url) from exc
    except OSError as exc:
        raise NetworkError(f"download failed: {exc}", url) from exc
    try:
        with tarfile.open(fileobj=io.BytesIO(payload), mode="r:*") as tar:
            member = next((mem for mem in tar.getmembers()
                           if mem.isfile() and Path(mem.name).name == f"{name}.mtx"), None)
            if member is None:
                raise ArchiveError(f"archive has no {name}.mtx", url)
            data = tar.extractfile(member).read()
    except tarfile.TarError as exc:
        raise ArchiveError(f"corrupt archive: {exc}", url) from exc
    try:
        mat = _parse_mm(io.StringIO(data.decode("ascii", errors="replace")), f"{url}#{name}.mtx")
    except MatrixMarketError as exc:
        raise ArchiveError(f"unparsable matrix: {exc}", url) from exc
    if mat.nrows <= 0 or mat.ncols <= 0:
        raise ArchiveError(f"degenerate matrix shape {mat.shape}", url)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target
