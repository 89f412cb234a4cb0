"""Plain-text readers and writers used by the CLI.

Interval sets are CSV rows ``lo,hi`` (one part per row, optional ``lo,hi``
header).  The full line is the single row ``-inf,inf``; no rows is the empty
set.  Floats are written with ``repr`` so a written set reads back identical.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .errors import DataError
from .intervals import EMPTY, FULL_LINE, IntervalSet, normalize


def _rows(text: str, origin: str):
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        row = [c.strip() for c in row]
        if not row or all(not c for c in row) or row[0].startswith("#"):
            continue
        yield lineno, row


def _floats(row, lineno, origin) -> list[float]:
    try:
        return [float(c) for c in row]
    except ValueError:
        raise DataError(f"{origin}:{lineno}: non-numeric field in {','.join(row)}") from None


def parse_interval_set(text: str, origin: str = "<sets>") -> IntervalSet:
    parts = []
    for lineno, row in _rows(text, origin):
        if lineno == 1 and [c.lower() for c in row] == ["lo", "hi"]:
            continue
        if len(row) != 2:
            raise DataError(f"{origin}:{lineno}: expected lo,hi; got {len(row)} fields")
        lo, hi = _floats(row, lineno, origin)
        if math.isnan(lo) or math.isnan(hi):
            raise DataError(f"{origin}:{lineno}: NaN endpoint")
        if lo == -math.inf and hi == math.inf:
            return FULL_LINE
        if math.isinf(lo) or math.isinf(hi):
            raise DataError(f"{origin}:{lineno}: half-infinite intervals are not supported")
        if lo > hi:
            raise DataError(f"{origin}:{lineno}: lo > hi")
        parts.append((lo, hi))
    return normalize(parts) if parts else EMPTY


def format_interval_set(s: IntervalSet) -> str:
    if s.full:
        return "-inf,inf\n"
    return "".join(f"{lo!r},{hi!r}\n" for lo, hi in s.parts)


def parse_numbers(text: str, origin: str = "<weights>") -> list[float]:
    """All numbers in a file, row-major; separators may be commas or newlines."""
    out: list[float] = []
    for lineno, row in _rows(text, origin):
        vals = _floats([c for c in row if c], lineno, origin)
        if any(math.isnan(v) or math.isinf(v) for v in vals):
            raise DataError(f"{origin}:{lineno}: non-finite weight")
        out += vals
    if not out:
        raise DataError(f"{origin}: no numbers found")
    return out


def parse_matrix(text: str, origin: str = "<matrix>") -> np.ndarray:
    """A rectangular 0/1 (or numeric) CSV matrix, one row per line."""
    rows = []
    for lineno, row in _rows(text, origin):
        vals = _floats(row, lineno, origin)
        if rows and len(vals) != len(rows[0]):
            raise DataError(f"{origin}:{lineno}: expected {len(rows[0])} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise DataError(f"{origin}: empty matrix")
    return np.asarray(rows)


def read_text(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise DataError(f"{path}: {e.strerror}") from None
