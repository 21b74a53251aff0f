"""Instance parsers and machine-readable solve reports.

QAPLIB files are a dimension token followed by two row-major matrices;
sparse patterns come as Matrix Market symmetric coordinate files or plain
"i j" edge lists (both 1-based). Reports round-trip losslessly through the
JSON-lines format; the CSV format is a fixed-header aggregate view.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .bandwidth import PatternMatrix
from .core import SolveResult

CSV_HEADER = ["name", "variant", "n", "obj", "obj_best", "gap", "nfe", "outer_iters", "time"]


class TokenCount(ValueError):
    """Wrong number of tokens for the declared dimension."""


class NonNumeric(ValueError):
    """A token that should be a number is not."""


class BadHeader(ValueError):
    """Malformed Matrix Market banner or size line."""


class IndexOutOfRange(ValueError):
    """Coordinate entry outside the declared dimensions."""


def _decode(text) -> str:
    return text.decode() if isinstance(text, (bytes, bytearray)) else text


def parse_qaplib(text) -> tuple[np.ndarray, np.ndarray]:
    """Parse a QAPLIB instance into its two unscaled matrices.

    Expects one dimension token followed by exactly 2 n^2 numeric tokens,
    whitespace and newline agnostic. Errors carry the byte offset of the
    offending token.
    """
    raw = _decode(text)
    tokens = []
    offset = 0
    for line in raw.splitlines(keepends=True):
        col = 0
        for tok in line.split():
            col = line.index(tok, col)
            tokens.append((tok, offset + col))
            col += len(tok)
        offset += len(line)
    if not tokens:
        raise TokenCount("empty input")
    tok, pos = tokens[0]
    try:
        n = int(tok)
    except ValueError:
        raise NonNumeric(f"dimension token {tok!r} at byte {pos} is not an integer") from None
    if n <= 0:
        raise TokenCount(f"dimension must be positive, got {n}")
    expected = 1 + 2 * n * n
    if len(tokens) != expected:
        raise TokenCount(f"expected {expected} tokens for n={n}, found {len(tokens)}")
    values = np.empty(2 * n * n)
    for idx, (tok, pos) in enumerate(tokens[1:]):
        try:
            values[idx] = float(tok)
        except ValueError:
            raise NonNumeric(f"token {tok!r} at byte {pos} is not numeric") from None
    a = values[: n * n].reshape(n, n)
    b = values[n * n:].reshape(n, n)
    return a, b


def write_qaplib(a: np.ndarray, b: np.ndarray) -> str:
    """Serialize two matrices back to QAPLIB text."""
    n = a.shape[0]

    def fmt(m):
        return "\n".join(" ".join(_num_str(v) for v in row) for row in m)

    return f"{n}\n\n{fmt(a)}\n\n{fmt(b)}\n"


def _num_str(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_matrix_market_pattern(text) -> PatternMatrix:
    """Symmetric zero/nonzero pattern from a Matrix Market coordinate file.

    Values beyond zero/nonzero are ignored; explicit zeros are dropped and
    the pattern is symmetrized. Comment lines start with '%'.
    """
    raw = _decode(text)
    lines = raw.splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise BadHeader("missing %%MatrixMarket banner")
    banner = lines[0].lower().split()
    if len(banner) < 4 or banner[1] != "matrix" or banner[2] != "coordinate":
        raise BadHeader(f"unsupported banner {lines[0]!r}")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise BadHeader("missing size line")
    size = body[0].split()
    if len(size) != 3:
        raise BadHeader(f"bad size line {body[0]!r}")
    try:
        rows, cols, nnz = (int(t) for t in size)
    except ValueError:
        raise BadHeader(f"non-integer size line {body[0]!r}") from None
    if rows != cols:
        raise BadHeader(f"pattern must be square, got {rows}x{cols}")
    entries = body[1:]
    if len(entries) != nnz:
        raise BadHeader(f"declared {nnz} entries, found {len(entries)}")
    adj = np.zeros((rows, rows), dtype=bool)
    for ln in entries:
        parts = ln.split()
        if len(parts) < 2:
            raise BadHeader(f"bad entry line {ln!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            val = float(parts[2]) if len(parts) > 2 else 1.0
        except ValueError:
            raise BadHeader(f"non-numeric entry line {ln!r}") from None
        if not (1 <= i <= rows and 1 <= j <= rows):
            raise IndexOutOfRange(f"entry ({i}, {j}) outside 1..{rows}")
        if val != 0.0:
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = True
    return PatternMatrix(n=rows, adj=adj)


def parse_edge_list(text) -> PatternMatrix:
    """Pattern from 1-based "i j" pairs, one per line, undirected."""
    raw = _decode(text)
    edges = []
    n = 0
    for ln in raw.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise BadHeader(f"expected 'i j' pair, got {ln!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise NonNumeric(f"non-integer edge line {ln!r}") from None
        if i < 1 or j < 1:
            raise IndexOutOfRange(f"edge ({i}, {j}) must be 1-based")
        n = max(n, i, j)
        edges.append((i - 1, j - 1))
    return PatternMatrix.from_edges(n, edges)


@dataclass
class Report:
    """One solve in machine-readable form; gaps carry four decimals."""

    name: str
    variant: str
    n: int
    obj: float
    obj_best: float | None
    gap: str | None            # "0.0000"-style, matching published tables
    nfe: int
    outer_iters: int
    time: float
    permutation: list[int] = field(default_factory=list)  # 1-based
    seed: int = 0
    converged: bool = True
    config: dict = field(default_factory=dict)
    rounds: list[dict] = field(default_factory=list)


def format_gap(gap_percent: float | None) -> str | None:
    return None if gap_percent is None else f"{gap_percent:.4f}"


def report_from_result(inst_name: str, variant: str, n: int, res: SolveResult,
                       obj_best: float | None, seed: int, config: dict | None = None) -> Report:
    return Report(
        name=inst_name,
        variant=variant,
        n=n,
        obj=res.f_best,
        obj_best=obj_best,
        gap=format_gap(res.gap_percent),
        nfe=res.nfe,
        outer_iters=res.outer_iters,
        time=res.wall_time,
        permutation=[int(i) + 1 for i in res.x_best],
        seed=seed,
        converged=res.converged,
        config=dict(config or {}),
        rounds=[{k: v for k, v in r.items()} if isinstance(r, dict) else asdict(r)
                for r in res.rounds],
    )


def write_report(reports, fmt: str = "json-lines") -> str:
    """Serialize one report or a list of them; field order is fixed."""
    if isinstance(reports, Report):
        reports = [reports]
    if fmt == "json-lines":
        return "".join(json.dumps(asdict(r), sort_keys=False) + "\n" for r in reports)
    if fmt == "csv":
        buf = _stdio.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in reports:
            writer.writerow([
                r.name, r.variant, r.n, _num_str(r.obj),
                "" if r.obj_best is None else _num_str(r.obj_best),
                "" if r.gap is None else r.gap,
                r.nfe, r.outer_iters, repr(float(r.time)),
            ])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def read_report(text) -> list[Report]:
    """Parse JSON-lines reports back; inverse of write_report."""
    out = []
    for ln in _decode(text).splitlines():
        if not ln.strip():
            continue
        out.append(Report(**json.loads(ln)))
    return out


def best_known() -> dict[str, float]:
    """Best-known objectives keyed by instance name (sidecar table)."""
    path = resources.files("permlp.data").joinpath("best_known.json")
    return json.loads(path.read_text())


def lookup_best(name: str) -> float | None:
    return best_known().get(name.lower())
