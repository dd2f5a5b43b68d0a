"""Monthly time-series container and scale transformations.

A :class:`TimeSeries` is an immutable, gap-free run of monthly observations
anchored at a (year, month) start. All operations in this module are pure:
they return new series and never mutate their inputs.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

MONTH_ABBR = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
              "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

_DATE_RE = re.compile(r"^(\d{4})-(\d{2})$")


def month_index(year: int, month: int) -> int:
    """Number of months since year 0, used for gap-free period arithmetic."""
    return year * 12 + (month - 1)


def index_month(idx: int) -> tuple[int, int]:
    return idx // 12, idx % 12 + 1


def format_period(period: tuple[int, int], style: str = "iso") -> str:
    """Render (year, month) as ``2019-01`` (iso) or ``Jan-2019`` (name)."""
    year, month = period
    if style == "name":
        return f"{MONTH_ABBR[month - 1]}-{year:04d}"
    return f"{year:04d}-{month:02d}"


@dataclass(frozen=True)
class TimeSeries:
    """Gap-free monthly series of finite real values.

    ``start`` is the (year, month) of the first observation; ``values`` is
    stored as a read-only float array. The monthly frequency is carried
    explicitly so other calendars can be added later, but only 12 is
    accepted for now.
    """

    start: tuple[int, int]
    values: np.ndarray
    frequency: int = 12

    def __post_init__(self):
        year, month = self.start
        if not (1 <= month <= 12):
            raise DataError(f"start month must be in 1..12, got {month}")
        if self.frequency != 12:
            raise DataError("only monthly series (frequency 12) are supported")
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise DataError("series must hold at least one value")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at position {bad}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start", (int(year), int(month)))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def end(self) -> tuple[int, int]:
        """Period of the last observation."""
        return index_month(month_index(*self.start) + len(self) - 1)

    def periods(self) -> list[tuple[int, int]]:
        base = month_index(*self.start)
        return [index_month(base + i) for i in range(len(self))]


def load_csv(path: str | Path) -> TimeSeries:
    """Read a ``date,value`` CSV with strictly consecutive ``YYYY-MM`` rows.

    Raises :class:`DataError` naming the offending 1-based row for a missing
    file, malformed header, date gaps or duplicates, and unparseable or
    non-finite values.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    text = path.read_text(encoding="utf-8-sig")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln.rstrip("\r") for ln in lines]
    if not lines or lines[0] != "date,value":
        raise DataError(f"{path}: malformed header at row 1, expected 'date,value'")
    if len(lines) < 2:
        raise DataError(f"{path}: no data rows")

    values: list[float] = []
    start: tuple[int, int] | None = None
    prev_idx: int | None = None
    for rowno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}: expected 'date,value' at row {rowno}")
        m = _DATE_RE.match(parts[0])
        if not m:
            raise DataError(f"{path}: bad date {parts[0]!r} at row {rowno}, expected YYYY-MM")
        year, month = int(m.group(1)), int(m.group(2))
        if not (1 <= month <= 12):
            raise DataError(f"{path}: month out of range at row {rowno}")
        idx = month_index(year, month)
        if prev_idx is None:
            start = (year, month)
        elif idx == prev_idx:
            raise DataError(f"{path}: duplicate month at row {rowno}")
        elif idx != prev_idx + 1:
            raise DataError(f"{path}: gap at row {rowno}")
        prev_idx = idx
        try:
            val = float(parts[1])
        except ValueError:
            raise DataError(f"{path}: unparseable value {parts[1]!r} at row {rowno}") from None
        if not math.isfinite(val):
            raise DataError(f"{path}: non-finite value at row {rowno}")
        values.append(val)
    assert start is not None
    return TimeSeries(start, np.asarray(values))


def write_csv(series: TimeSeries, path: str | Path) -> None:
    """Write the documented CSV format; inverse of :func:`load_csv`."""
    lines = ["date,value"]
    for period, value in zip(series.periods(), series.values):
        lines.append(f"{format_period(period)},{_format_value(value)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _format_value(value: float) -> str:
    # repr round-trips doubles exactly; integers print without a trailing .0
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def box_cox_values(values: np.ndarray, lam: float) -> np.ndarray:
    """Value-level power transform: log for ``lam == 0``, else (y^lam - 1)/lam."""
    if not math.isfinite(lam):
        raise DataError("lambda must be finite")
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0):
        bad = int(np.flatnonzero(vals <= 0)[0])
        raise DataError(f"power transform requires positive values; "
                        f"value {vals[bad]} at position {bad}")
    if lam == 0:
        return np.log(vals)
    return (np.power(vals, lam) - 1.0) / lam


def inv_box_cox_values(values: np.ndarray, lam: float) -> np.ndarray:
    """Value-level inverse of :func:`box_cox_values`."""
    if not math.isfinite(lam):
        raise DataError("lambda must be finite")
    vals = np.asarray(values, dtype=float)
    if lam == 0:
        return np.exp(vals)
    base = lam * vals + 1.0
    if np.any(base <= 0):
        bad = int(np.flatnonzero(base <= 0)[0])
        raise DataError(f"inverse transform undefined at position {bad}: "
                        f"lambda*y + 1 = {base[bad]}")
    return np.power(base, 1.0 / lam)


def box_cox(series: TimeSeries, lam: float) -> TimeSeries:
    """Power-transform the series; values must be strictly positive."""
    return TimeSeries(series.start, box_cox_values(series.values, lam), series.frequency)


def inv_box_cox(series: TimeSeries, lam: float) -> TimeSeries:
    """Exact inverse of :func:`box_cox` (up to floating round-off)."""
    return TimeSeries(series.start, inv_box_cox_values(series.values, lam), series.frequency)


def difference(series: TimeSeries, d: int) -> TimeSeries:
    """Apply the first-difference operator ``d`` times.

    The result is ``d`` observations shorter and starts ``d`` months later.
    """
    if d < 0:
        raise DataError("differencing order must be non-negative")
    if d == 0:
        return series
    if len(series) <= d:
        raise DataError(f"series of length {len(series)} is too short to difference {d} times")
    out = np.diff(series.values, n=d)
    start = index_month(month_index(*series.start) + d)
    return TimeSeries(start, out, series.frequency)


def integrate_values(diffs: Sequence[float], seeds: Sequence[float]) -> np.ndarray:
    """Rebuild a level sequence from its d-th differences and d seed values.

    ``seeds`` are the first d values of the original sequence; ``diffs`` may
    be empty, in which case the seeds alone are returned.
    """
    seeds = np.asarray(list(seeds), dtype=float)
    out = np.asarray(list(diffs), dtype=float)
    d = seeds.size
    for j in range(d - 1, -1, -1):
        seed = float(np.diff(seeds, n=j)[0]) if j > 0 else float(seeds[0])
        out = np.concatenate([[seed], seed + np.cumsum(out)])
    return out


def integrate(diffs: TimeSeries, seeds: Sequence[float]) -> TimeSeries:
    """Undo ``difference``: ``integrate(difference(x, d), x.values[:d])`` == x.

    The result starts ``len(seeds)`` months before ``diffs``.
    """
    out = integrate_values(diffs.values, seeds)
    start = index_month(month_index(*diffs.start) - len(list(seeds)))
    return TimeSeries(start, out, diffs.frequency)


def split(series: TimeSeries, n_train: int) -> tuple[TimeSeries, TimeSeries]:
    """Split into the first ``n_train`` points and the remainder.

    Both parts must be non-empty; the validation part starts one month after
    the training part ends.
    """
    if not (1 <= n_train < len(series)):
        raise DataError(f"n_train must be in 1..{len(series) - 1}, got {n_train}")
    train = TimeSeries(series.start, series.values[:n_train], series.frequency)
    vstart = index_month(month_index(*series.start) + n_train)
    validation = TimeSeries(vstart, series.values[n_train:], series.frequency)
    return train, validation
