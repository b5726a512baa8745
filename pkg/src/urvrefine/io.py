"""Reading dense matrices and writing refinement traces."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MM_HEADER = "%%MatrixMarket"


class MatrixParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.message = message
        self.line = line
        self.path = None if path is None else str(path)
        where = ""
        if self.path is not None:
            where = self.path + ":"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


def _number(token: str, lineno: int, path) -> float:
    try:
        x = float(token)
    except ValueError:
        raise MatrixParseError(f"non-numeric token {token!r}", lineno, path) from None
    if not np.isfinite(x):
        raise MatrixParseError(f"non-finite value {token!r}", lineno, path)
    return x


def _parse_csv(lines, path) -> np.ndarray:
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tokens = [t.strip() for t in text.split(",")]
        row = [_number(t, lineno, path) for t in tokens]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MatrixParseError(
                f"row has {len(row)} entries, expected {width}", lineno, path)
        rows.append(row)
    if not rows:
        raise MatrixParseError("no data rows", None, path)
    return np.array(rows, dtype=np.float64)


def _parse_matrix_market(lines, path) -> np.ndarray:
    header = lines[0].split()
    if len(header) < 5 or header[0] != MM_HEADER:
        raise MatrixParseError("malformed MatrixMarket header", 1, path)
    obj, fmt, field, symmetry = (h.lower() for h in header[1:5])
    if obj != "matrix" or fmt != "array":
        raise MatrixParseError(f"only 'matrix array' is supported, got {obj!r} {fmt!r}", 1, path)
    if field not in ("real", "double", "integer"):
        raise MatrixParseError(f"unsupported field {field!r}", 1, path)
    if symmetry != "general":
        raise MatrixParseError(f"unsupported symmetry {symmetry!r}", 1, path)

    shape = None
    values = []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        tokens = text.split()
        if shape is None:
            if len(tokens) != 2:
                raise MatrixParseError("expected 'rows cols' size line", lineno, path)
            try:
                m, n = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise MatrixParseError("non-integer size line", lineno, path) from None
            if m < 1 or n < 1:
                raise MatrixParseError("matrix dimensions must be positive", lineno, path)
            shape = (m, n)
            continue
        for t in tokens:
            if len(values) == shape[0] * shape[1]:
                raise MatrixParseError("more entries than the size line declares", lineno, path)
            values.append(_number(t, lineno, path))
    if shape is None:
        raise MatrixParseError("missing size line", len(lines), path)
    if len(values) != shape[0] * shape[1]:
        raise MatrixParseError(
            f"expected {shape[0] * shape[1]} entries, found {len(values)}", len(lines), path)
    # column-major body
    return np.array(values, dtype=np.float64).reshape(shape[1], shape[0]).T.copy()


def parse_matrix(path, format: str = "auto", require_square: bool = False) -> np.ndarray:
    """Read a dense matrix from a CSV or MatrixMarket array file.

    ``format="auto"`` picks MatrixMarket when the first line starts with
    ``%%MatrixMarket``.  Decimal strings are converted with correct
    rounding.  Problems raise :class:`MatrixParseError` carrying the
    1-based line number.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixParseError(f"cannot read file: {exc.strerror}", None, path) from None
    lines = text.splitlines()
    if format == "auto":
        format = "matrixmarket" if lines and lines[0].startswith(MM_HEADER) else "csv"
    if format == "matrixmarket":
        if not lines:
            raise MatrixParseError("empty file", None, path)
        m = _parse_matrix_market(lines, path)
    elif format == "csv":
        m = _parse_csv(lines, path)
    else:
        raise ValueError(f"unknown format {format!r}")
    if require_square and m.shape[0] != m.shape[1]:
        raise MatrixParseError(f"matrix must be square, got {m.shape[0]}x{m.shape[1]}", None, path)
    return m


def write_matrix_market(path, m) -> None:
    m = np.asarray(m, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MM_HEADER} matrix array real general\n")
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for x in m.T.ravel():
            fh.write(f"{fmt17(x)}\n")


def fmt17(x: float) -> str:
    """17 significant digits; always round-trips to the same double."""
    return format(float(x), ".17g")


def fmt15(x: float) -> str:
    return format(float(x), ".15g")


def trace_line(rec) -> dict:
    return {
        "l": rec.l,
        "e": fmt17(rec.e),
        "h_norm": fmt17(rec.h_norm),
        "rho": None if rec.rho is None else fmt17(rec.rho),
        "corner_flipped": bool(rec.corner_flipped),
    }


def write_trace(path, history) -> None:
    """One JSON object per half-sweep, fields {l, e, h_norm, rho, corner_flipped}."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history:
            fh.write(json.dumps(trace_line(rec)) + "\n")


def read_trace(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if raw.strip():
                d = json.loads(raw)
                d["e"] = float(d["e"])
                d["h_norm"] = float(d["h_norm"])
                if d["rho"] is not None:
                    d["rho"] = float(d["rho"])
                out.append(d)
    return out
