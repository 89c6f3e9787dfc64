"""Reporting analytics: monthly rollups, element differencing, correlations, regimes."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .elements import ELEMENT_NAMES, WRAPPING_ELEMENTS, EphemerisSeries

#: Observations with at least this many paired samples get a correlation cell.
MIN_CORRELATION_SAMPLES = 3

GEO_MEAN_MOTION = 1.0027
GEO_TOLERANCE = 0.01
LEO_MIN_MEAN_MOTION = 11.25


class Regime(str, enum.Enum):
    LEO = "LEO"
    MEO = "MEO"
    GEO = "GEO"


def regime_of(mean_motion: float) -> Regime:
    """Coarse orbital regime from mean motion (rev/day).

    Near-synchronous objects are GEO, fast movers are LEO, the rest MEO.
    """
    if not mean_motion > 0:
        raise ValueError(f"mean motion must be positive, got {mean_motion}")
    if abs(mean_motion - GEO_MEAN_MOTION) <= GEO_TOLERANCE:
        return Regime.GEO
    if mean_motion >= LEO_MIN_MEAN_MOTION:
        return Regime.LEO
    return Regime.MEO


def wrap_delta(delta: float) -> float:
    """Shortest signed angular difference, mapped into [-180, 180)."""
    return (delta + 180.0) % 360.0 - 180.0


def diff_series(values, wrap: bool = False) -> np.ndarray:
    """First differences of one element series; optional 0/360-seam adjustment."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("differencing needs a 1-d series of at least two values")
    d = np.diff(arr)
    if wrap:
        d = (d + 180.0) % 360.0 - 180.0
    return d


def series_diffs(series: EphemerisSeries) -> dict[str, dict[str, np.ndarray]]:
    """Per-element deltas. Wrapping angles get both raw and wrap-adjusted columns."""
    matrix = series.matrix()
    if matrix.shape[0] < 2:
        raise ValueError(f"object {series.norad_id}: need at least two observations to diff")
    out: dict[str, dict[str, np.ndarray]] = {}
    for i, name in enumerate(ELEMENT_NAMES):
        col = {"raw": np.diff(matrix[:, i])}
        if name in WRAPPING_ELEMENTS:
            col["wrapped"] = diff_series(matrix[:, i], wrap=True)
        out[name] = col
    return out


def pearson(x, y) -> float | None:
    """Pearson correlation, or None when undefined (short or constant input)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d and aligned")
    if x.size < MIN_CORRELATION_SAMPLES:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt((dx * dx).sum() * (dy * dy).sum())
    if denom == 0.0:
        return None
    return float((dx * dy).sum() / denom)


def element_correlations(matrix: np.ndarray) -> list[list[float | None]]:
    """6x6 Pearson matrix over pooled observations; diagonal pinned to 1.

    Cells without enough data (or with a constant column) are None.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(ELEMENT_NAMES):
        raise ValueError(f"expected an N x {len(ELEMENT_NAMES)} matrix, got {matrix.shape}")
    k = len(ELEMENT_NAMES)
    out: list[list[float | None]] = [[None] * k for _ in range(k)]
    for i in range(k):
        out[i][i] = 1.0
        for j in range(i + 1, k):
            r = pearson(matrix[:, i], matrix[:, j])
            out[i][j] = r
            out[j][i] = r
    return out


def grouped_correlations(
    series_list: list[EphemerisSeries],
    group_of,
    use_diffs: bool = False,
) -> dict[tuple, list[list[float | None]]]:
    """Correlation matrices keyed by group, pooling member observations.

    ``group_of(series)`` names the group (for example a mission/regime pair).
    With ``use_diffs`` the matrices are computed over first differences, with
    the wrap adjustment applied to wrapping angles.
    """
    pools: dict[tuple, list[np.ndarray]] = {}
    for series in series_list:
        matrix = series.matrix()
        if use_diffs:
            if matrix.shape[0] < 2:
                continue
            cols = []
            for i, name in enumerate(ELEMENT_NAMES):
                cols.append(diff_series(matrix[:, i], wrap=name in WRAPPING_ELEMENTS))
            matrix = np.stack(cols, axis=1)
        if matrix.shape[0] == 0:
            continue
        pools.setdefault(group_of(series), []).append(matrix)
    return {
        key: element_correlations(np.vstack(mats))
        for key, mats in sorted(pools.items(), key=lambda kv: repr(kv[0]))
    }


@dataclass(frozen=True)
class MonthlyRow:
    group: str
    month: str
    count: int
    change: int | None
    pct_change: float | None
    exceeds_mean: bool


def _month_key(t: datetime) -> str:
    t = t.astimezone(timezone.utc)
    return f"{t.year:04d}-{t.month:02d}"


def _month_range(keys) -> list[str]:
    first = min(keys)
    last = max(keys)
    year, month = int(first[:4]), int(first[5:])
    out = []
    while True:
        key = f"{year:04d}-{month:02d}"
        out.append(key)
        if key == last:
            return out
        month += 1
        if month > 12:
            month = 1
            year += 1


def monthly_counts(events: list[tuple[datetime, str]]) -> list[MonthlyRow]:
    """Calendar-month counts per group with month-over-month deltas.

    ``events`` are (epoch, group) pairs for anomalous observations. The first
    month of each group has no change; a zero previous count leaves the
    percent change undefined (None). ``exceeds_mean`` marks months whose
    change is strictly above the group's mean change.
    """
    if not events:
        return []
    months = _month_range([_month_key(t) for t, _ in events])
    groups = sorted({g for _, g in events})
    counts: dict[str, dict[str, int]] = {g: {m: 0 for m in months} for g in groups}
    for t, g in events:
        counts[g][_month_key(t)] += 1

    rows: list[MonthlyRow] = []
    for g in groups:
        series = [counts[g][m] for m in months]
        changes = [series[i] - series[i - 1] for i in range(1, len(series))]
        mean_change = float(np.mean(changes)) if changes else 0.0
        prev: int | None = None
        for m, count in zip(months, series):
            if prev is None:
                change, pct = None, None
                exceeds = False
            else:
                change = count - prev
                pct = None if prev == 0 else 100.0 * change / prev
                exceeds = change > mean_change
            rows.append(MonthlyRow(group=g, month=m, count=count,
                                   change=change, pct_change=pct, exceeds_mean=exceeds))
            prev = count
    return rows


def percent_change(old: float, new: float) -> float | None:
    """Relative change in percent; undefined (None) when the old value is 0."""
    if old == 0:
        return None
    return 100.0 * (new - old) / old
