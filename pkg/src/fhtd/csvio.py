"""CSV ingestion with per-column stationarity transforms.

Directives are applied left to right, separated by ``+`` or ``,``:

    none | diff | log | logdiff | seasonal_diff(s) | sdiff(s)

e.g. ``log+seasonal_diff(12)+diff`` reproduces the (1-B^12)(1-B) log x
transform.  Differencing consumes leading observations; after all transforms
the common undefined prefix is trimmed so every column covers the same rows.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (LengthMismatchAfterTransform, MissingColumn,
                     NonNumericCell)

_SDIFF_RE = re.compile(r"^(?:seasonal_diff|sdiff)\((\d+)\)$")


@dataclass
class CsvDataset:
    """Column roles and transform directives for one CSV file."""

    y_col: str
    x_cols: list[str]
    date_col: str | None = None
    transforms: dict[str, str] = field(default_factory=dict)


def parse_directive(directive: str) -> list[tuple[str, int]]:
    """Split a directive string into (op, seasonal-period) steps."""
    steps: list[tuple[str, int]] = []
    for token in re.split(r"[+,]", directive.strip()):
        token = token.strip().lower()
        if not token or token == "none":
            continue
        if token == "diff":
            steps.append(("diff", 1))
        elif token == "log":
            steps.append(("log", 0))
        elif token == "logdiff":
            steps.append(("log", 0))
            steps.append(("diff", 1))
        else:
            m = _SDIFF_RE.match(token)
            if not m:
                raise ValueError(f"unknown transform token {token!r}")
            steps.append(("diff", int(m.group(1))))
    return steps


def apply_transform(values: np.ndarray, directive: str, col: str) -> tuple[np.ndarray, int]:
    """Apply a directive; returns the series and its undefined-prefix length."""
    out = np.asarray(values, dtype=float)
    lost = 0
    for op, lag in parse_directive(directive):
        if op == "log":
            bad = np.flatnonzero(out <= 0.0)
            if bad.size:
                raise NonNumericCell(
                    f"log transform of column {col!r} hit a nonpositive value "
                    f"at data row {bad[0] + 1 + lost}")
            out = np.log(out)
        else:
            if out.shape[0] <= lag:
                raise LengthMismatchAfterTransform(
                    f"column {col!r} too short for differencing at lag {lag}")
            out = out[lag:] - out[:-lag]
            lost += lag
    return out, lost


def load_csv(path: str, spec: CsvDataset):
    """Read, transform, and align a CSV into (y, x, x_names, dates).

    The file must be RFC-4180 with a header row.  All requested columns are
    parsed as floats; transforms are applied per column and the rows lost to
    differencing are trimmed from the front of every series so the returned
    arrays are aligned.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path} is empty") from None
        rows = list(reader)
    header = [h.strip() for h in header]
    wanted = [spec.y_col] + list(spec.x_cols)
    if spec.date_col is not None:
        wanted = [spec.date_col] + wanted
    index = {}
    for name in wanted:
        if name not in header:
            raise MissingColumn(f"column {name!r} not in {path}")
        index[name] = header.index(name)

    def numeric(name: str) -> np.ndarray:
        col = index[name]
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            if col >= len(row):
                raise NonNumericCell(f"row {i + 2}: missing value in column {name!r}")
            try:
                out[i] = float(row[col])
            except ValueError:
                raise NonNumericCell(
                    f"row {i + 2}, column {name!r}: cannot parse "
                    f"{row[col]!r} as a number") from None
        return out

    transformed: dict[str, np.ndarray] = {}
    lost: dict[str, int] = {}
    for name in [spec.y_col] + list(spec.x_cols):
        directive = spec.transforms.get(name, "none")
        transformed[name], lost[name] = apply_transform(numeric(name), directive, name)

    max_lost = max(lost.values(), default=0)
    aligned = {}
    for name, series in transformed.items():
        head = max_lost - lost[name]
        aligned[name] = series[head:]
    lengths = {v.shape[0] for v in aligned.values()}
    if len(lengths) != 1:
        raise LengthMismatchAfterTransform(
            f"columns disagree in length after transforms: {sorted(lengths)}")
    if any(not np.all(np.isfinite(v)) for v in aligned.values()):
        raise NonNumericCell("non-finite value survived the transforms")

    y = aligned[spec.y_col]
    x = np.column_stack([aligned[c] for c in spec.x_cols]) \
        if spec.x_cols else np.zeros((y.shape[0], 0))
    dates = None
    if spec.date_col is not None:
        dates = [row[index[spec.date_col]] for row in rows][max_lost:]
    return y, x, list(spec.x_cols), dates
