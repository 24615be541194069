"""Return panels: the (dates x assets) matrix every other module consumes."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import PanelAlignmentError, PanelParseError


class PanelGapWarning(UserWarning):
    """Dates skip more than one month somewhere in the file."""


def _month_ordinal(label: str, row: int) -> int:
    """Parse 'yyyy-mm' to a month count; raise with row context otherwise."""
    parts = label.split("-")
    if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
        raise PanelParseError("row %d: bad date %r, expected yyyy-mm" % (row, label))
    try:
        year, month = int(parts[0]), int(parts[1])
    except ValueError:
        raise PanelParseError("row %d: bad date %r, expected yyyy-mm" % (row, label))
    if not 1 <= month <= 12:
        raise PanelParseError("row %d: month out of range in %r" % (row, label))
    return year * 12 + (month - 1)


def month_label(ordinal: int) -> str:
    return "%04d-%02d" % (ordinal // 12, ordinal % 12 + 1)


@dataclass
class ReturnPanel:
    """Aligned monthly percent returns for a set of assets.

    `returns[t, i]` is the percent return of asset i in month `dates[t]`.
    """

    asset_names: List[str]
    dates: List[str]
    returns: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        if self.returns.ndim != 2:
            raise ValueError("returns must be 2-d, got %r" % (self.returns.shape,))
        n, k = self.returns.shape
        if n < 2:
            raise ValueError("panel needs at least 2 months, got %d" % n)
        if k < 1:
            raise ValueError("panel needs at least 1 asset")
        if len(self.asset_names) != k:
            raise ValueError(
                "%d asset names for %d columns" % (len(self.asset_names), k)
            )
        if len(set(self.asset_names)) != k:
            raise ValueError("asset names must be unique")
        if len(self.dates) != n:
            raise ValueError("%d dates for %d rows" % (len(self.dates), n))
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("returns contain non-finite values")
        ords = [_month_ordinal(d, i) for i, d in enumerate(self.dates)]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise ValueError("dates must be strictly increasing")

    @property
    def n_months(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


def load_panel(path, mode: str = "returns") -> ReturnPanel:
    """Read a delimited panel file.

    Layout: header `date,NAME1,...`; one row per month, ISO yyyy-mm dates,
    strictly increasing. `mode="returns"` takes cells as percent returns;
    `mode="prices"` takes them as price levels and converts to simple
    percent returns 100 * (P_t / P_{t-1} - 1), dropping the first month.
    Gaps larger than one month are flagged with PanelGapWarning.
    """
    if mode not in ("returns", "prices"):
        raise ValueError("mode must be 'returns' or 'prices', got %r" % mode)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PanelParseError("empty file %s" % path)
    header = rows[0]
    if len(header) < 2 or header[0].strip().lower() != "date":
        raise PanelParseError("header must be 'date,<asset names>', got %r" % header)
    names = [h.strip() for h in header[1:]]
    if any(not n for n in names):
        raise PanelParseError("blank asset name in header")

    dates: List[str] = []
    ordinals: List[int] = []
    values: List[List[float]] = []
    for idx, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise PanelAlignmentError(
                "row %d has %d cells, header has %d" % (idx, len(row), len(header))
            )
        label = row[0].strip()
        ordinals.append(_month_ordinal(label, idx))
        dates.append(label)
        parsed = []
        for col, cell in enumerate(row[1:], start=2):
            try:
                v = float(cell)
            except ValueError:
                raise PanelParseError(
                    "row %d column %d: cannot parse %r as a number" % (idx, col, cell)
                )
            if not np.isfinite(v):
                raise PanelParseError("row %d column %d: non-finite value" % (idx, col))
            parsed.append(v)
        values.append(parsed)

    if len(values) < 2:
        raise PanelParseError("need at least 2 data rows, got %d" % len(values))
    for prev, cur, row in zip(ordinals, ordinals[1:], range(3, len(ordinals) + 2)):
        if cur <= prev:
            raise PanelParseError("row %d: dates not strictly increasing" % row)
    if any(b - a > 1 for a, b in zip(ordinals, ordinals[1:])):
        warnings.warn("panel has month gaps larger than one period", PanelGapWarning)

    data = np.array(values, dtype=float)
    if mode == "prices":
        if np.any(data <= 0.0):
            raise PanelParseError("price mode requires strictly positive prices")
        data = 100.0 * (data[1:] / data[:-1] - 1.0)
        dates = dates[1:]
    return ReturnPanel(asset_names=names, dates=dates, returns=data)


def write_panel(panel: ReturnPanel, path) -> None:
    """Write a returns-mode panel file that load_panel reads back bit-exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(panel.asset_names))
        for date, row in zip(panel.dates, panel.returns):
            writer.writerow([date] + [repr(float(v)) for v in row])
