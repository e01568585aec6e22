"""Loading, monthly aggregation, splicing and alignment of raw series.

Months are handled internally as integer indices ``12 * year + (month - 1)``
so that month arithmetic is plain integer arithmetic.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError, InputError

PERCENT_POINTS = "percent-points"
PERCENT_RETURN = "percent-return"
DIMENSIONLESS = "dimensionless"
UNITS = (PERCENT_POINTS, PERCENT_RETURN, DIMENSIONLESS)

MISSING_MARKERS = ("", ".")

Month = tuple[int, int]


def month_index(month: Month) -> int:
    year, mon = month
    if not 1 <= mon <= 12:
        raise InputError(f"invalid month {mon}")
    return 12 * year + (mon - 1)


def index_month(index: int) -> Month:
    return divmod(index, 12)[0], index % 12 + 1


def parse_month(text: str) -> Month:
    """Parse ``YYYY-MM``, ``YYYYMM`` or ``YYYY-MM-DD`` into ``(year, month)``."""
    s = text.strip()
    try:
        if len(s) == 6 and s.isdigit():
            month = (int(s[:4]), int(s[4:]))
        elif len(s) == 7 and s[4] == "-":
            month = (int(s[:4]), int(s[5:]))
        else:
            d = dt.date.fromisoformat(s)
            month = (d.year, d.month)
        month_index(month)
    except (ValueError, InputError):
        raise InputError(f"malformed month {text!r}") from None
    return month


def format_month(month: Month) -> str:
    return f"{month[0]:04d}-{month[1]:02d}"


@dataclass(frozen=True)
class DailySeries:
    """Dated observations; missing values are stored as NaN."""

    dates: tuple[dt.date, ...]
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) != len(self.dates):
            raise InputError("dates and values must be 1-D and of equal length")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise InputError(f"unsorted dates: {cur} follows {prev}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class MonthlySeries:
    """One value per consecutive month starting at ``start``."""

    start: Month
    values: np.ndarray
    unit: str = DIMENSIONLESS
    name: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise InputError("monthly values must be 1-D")
        if not np.all(np.isfinite(values)):
            raise InputError(f"non-finite value in monthly series {self.name!r}")
        if self.unit not in UNITS:
            raise InputError(f"unknown unit {self.unit!r}")
        if self.unit == PERCENT_POINTS and np.any(values <= 0):
            raise InputError(f"volatility series {self.name!r} must be positive")
        month_index(self.start)
        values.setflags(write=False)
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def start_index(self) -> int:
        return month_index(self.start)

    @property
    def end_index(self) -> int:
        """Index of the last month (inclusive)."""
        return self.start_index + len(self.values) - 1

    @property
    def end(self) -> Month:
        return index_month(self.end_index)

    def months(self) -> list[Month]:
        return [index_month(self.start_index + i) for i in range(len(self))]

    def between(self, first: Month, last: Month) -> "MonthlySeries":
        """Restrict to the inclusive month range ``[first, last]``."""
        i0 = month_index(first) - self.start_index
        i1 = month_index(last) - self.start_index
        if i0 < 0 or i1 >= len(self) or i1 < i0:
            raise InputError(
                f"range {format_month(first)}..{format_month(last)} not covered by "
                f"{self.name or 'series'} ({format_month(self.start)}..{format_month(self.end)})"
            )
        return MonthlySeries(first, self.values[i0 : i1 + 1], self.unit, self.name)


@dataclass(frozen=True)
class AlignedPanel:
    """VIX and return series sharing one month range."""

    vix: MonthlySeries
    returns: Mapping[str, MonthlySeries] = field(default_factory=dict)

    def __post_init__(self):
        for name, series in self.returns.items():
            if series.start != self.vix.start or len(series) != len(self.vix):
                raise InputError(f"series {name!r} is not aligned with the VIX series")

    @property
    def start(self) -> Month:
        return self.vix.start

    def __len__(self):
        return len(self.vix)


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", path=path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            yield lineno, row


def _parse_value(cell, path, lineno):
    s = cell.strip()
    if s in MISSING_MARKERS:
        return np.nan
    try:
        return float(s)
    except ValueError:
        raise DataError(f"non-numeric value {cell!r}", path, lineno) from None


def load_csv(path, schema: str = "daily", unit: str = DIMENSIONLESS, name: str | None = None):
    """Read a two-column ``date,value`` CSV file.

    Parameters
    ----------
    path : path-like
        File to read. A header row is detected by a first cell that does not
        parse as a date.
    schema : {"daily", "monthly"}
        ``daily`` returns a :class:`DailySeries` with missing values kept as
        NaN; ``monthly`` returns a :class:`MonthlySeries` and rejects gaps or
        missing values.
    unit : str
        Unit tag for monthly series.
    name : str, optional
        Series name; defaults to the file stem.
    """
    if schema not in ("daily", "monthly"):
        raise InputError(f"unknown schema {schema!r}")
    name = Path(path).stem if name is None else name
    stamps, values = [], []
    first = True
    for lineno, row in _read_rows(path):
        if len(row) < 2:
            raise DataError("expected two columns", path, lineno)
        cell = row[0].strip()
        try:
            stamp = parse_month(cell) if schema == "monthly" else dt.date.fromisoformat(cell)
        except (ValueError, InputError):
            if first:
                first = False
                continue
            raise DataError(f"malformed date {cell!r}", path, lineno) from None
        first = False
        if stamps and stamp <= stamps[-1][0]:
            raise DataError(f"unsorted dates: {cell} does not follow previous row", path, lineno)
        stamps.append((stamp, lineno))
        values.append(_parse_value(row[1], path, lineno))
    if not stamps:
        raise DataError("no observations", path=path)

    if schema == "daily":
        return DailySeries(tuple(s for s, _ in stamps), np.array(values), name=name)

    start = month_index(stamps[0][0])
    for k, ((month, lineno), value) in enumerate(zip(stamps, values)):
        if month_index(month) != start + k:
            raise DataError(f"gap before month {format_month(month)}", path, lineno)
        if np.isnan(value):
            raise DataError(f"missing value for month {format_month(month)}", path, lineno)
    try:
        return MonthlySeries(stamps[0][0], np.array(values), unit=unit, name=name)
    except InputError as exc:
        raise DataError(str(exc), path=path) from None


def monthly_average(daily: DailySeries, unit: str = PERCENT_POINTS) -> MonthlySeries:
    """Average the non-missing daily values of each calendar month."""
    if len(daily) == 0:
        raise InputError("empty daily series")
    idx = np.array([12 * d.year + d.month - 1 for d in daily.dates])
    ok = ~np.isnan(daily.values)
    first, last = idx[0], idx[-1]
    span = last - first + 1
    sums = np.bincount(idx[ok] - first, weights=daily.values[ok], minlength=span)
    counts = np.bincount(idx[ok] - first, minlength=span)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        bad = format_month(index_month(int(first + empty[0])))
        raise InputError(f"month {bad} has no non-missing observations")
    return MonthlySeries(index_month(int(first)), sums / counts, unit=unit, name=daily.name)


def splice_vix(vxo: MonthlySeries, vix: MonthlySeries, switch_month: Month = (1990, 3)) -> MonthlySeries:
    """Join the old-index history (before ``switch_month``) with the new index.

    No rescaling is applied at the boundary.
    """
    switch = month_index(switch_month)
    if vxo.start_index >= switch:
        raise InputError("old-index series starts at or after the switch month")
    if vxo.end_index < switch - 1:
        raise InputError(
            f"coverage gap: old-index series ends {format_month(vxo.end)}, "
            f"switch month is {format_month(switch_month)}"
        )
    if vix.start_index > switch or vix.end_index < switch:
        raise InputError(
            f"coverage gap: new-index series does not cover switch month {format_month(switch_month)}"
        )
    head = vxo.values[: switch - vxo.start_index]
    tail = vix.values[switch - vix.start_index :]
    return MonthlySeries(vxo.start, np.concatenate([head, tail]), unit=PERCENT_POINTS, name="vix")


def align(vix: MonthlySeries, returns: Mapping[str, MonthlySeries]) -> AlignedPanel:
    """Trim the VIX and all return series to their common month range."""
    series = [vix, *returns.values()]
    lo = max(s.start_index for s in series)
    hi = min(s.end_index for s in series)
    if hi < lo:
        raise InputError("series have no overlapping months")
    first, last = index_month(lo), index_month(hi)
    return AlignedPanel(
        vix.between(first, last),
        {k: s.between(first, last) for k, s in returns.items()},
    )


def write_panel_csv(panel: AlignedPanel, path) -> None:
    names = list(panel.returns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["month", "vix", *names])
        for i, month in enumerate(panel.vix.months()):
            w.writerow(
                [format_month(month), repr(float(panel.vix.values[i]))]
                + [repr(float(panel.returns[n].values[i])) for n in names]
            )


def read_panel_csv(path) -> AlignedPanel:
    rows = list(_read_rows(path))
    if not rows:
        raise DataError("empty panel file", path=path)
    header = [c.strip() for c in rows[0][1]]
    if header[:2] != ["month", "vix"]:
        raise DataError("panel header must start with 'month,vix'", path, rows[0][0])
    body = rows[1:]
    if not body:
        raise DataError("panel has no rows", path=path)
    start = parse_month(body[0][1][0])
    cols = np.array([[_parse_value(c, path, ln) for c in row[1:]] for ln, row in body])
    vix = MonthlySeries(start, cols[:, 0], PERCENT_POINTS, "vix")
    returns = {n: MonthlySeries(start, cols[:, j + 1], PERCENT_RETURN, n) for j, n in enumerate(header[2:])}
    return AlignedPanel(vix, returns)


def write_column_csv(path, columns: Mapping[str, np.ndarray]) -> None:
    """Write equal-length columns to CSV with a header row."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)
