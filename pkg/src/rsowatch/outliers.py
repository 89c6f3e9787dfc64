"""Interquartile-range outlier labels: the ground truth models are judged against."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .elements import ELEMENT_NAMES, WRAPPING_ELEMENTS, EphemerisSeries
from .windows import PeriodWindow

log = logging.getLogger(__name__)

#: Tukey fence multiplier.
IQR_FACTOR = 1.5

#: Angular values within this many degrees of the 0/360 seam are flagged in
#: label exports so seam artifacts can be audited downstream.
NEAR_WRAP_MARGIN = 5.0

MIN_LABEL_POINTS = 4


def quartiles(values) -> tuple[float, float]:
    """First and third quartile via linear interpolation of order statistics.

    Uses the h = (n - 1) * p convention: the same one spreadsheet QUARTILE and
    numpy's default give. Requires at least four finite values.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d sequence, got shape {arr.shape}")
    if arr.size < MIN_LABEL_POINTS:
        raise ValueError(f"need at least {MIN_LABEL_POINTS} values, got {arr.size}")
    if not np.isfinite(arr).all():
        raise ValueError("values must be finite")
    s = np.sort(arr)
    out = []
    for p in (0.25, 0.75):
        h = (s.size - 1) * p
        lo = int(np.floor(h))
        frac = h - lo
        if lo + 1 < s.size:
            out.append(float(s[lo] + frac * (s[lo + 1] - s[lo])))
        else:
            out.append(float(s[lo]))
    return out[0], out[1]


def iqr_outliers(values) -> np.ndarray:
    """Boolean mask of points outside [Q1 - 1.5*IQR, Q3 + 1.5*IQR].

    A constant sequence has zero IQR and therefore no outliers.
    """
    arr = np.asarray(values, dtype=np.float64)
    q1, q3 = quartiles(arr)
    iqr = q3 - q1
    lower = q1 - IQR_FACTOR * iqr
    upper = q3 + IQR_FACTOR * iqr
    return (arr < lower) | (arr > upper)


@dataclass
class LabelTable:
    """Outlier labels for one (object, element) pair over one window."""

    norad_id: int
    element: str
    window: str
    epochs: list[datetime]
    values: np.ndarray
    labels: np.ndarray
    q1: float
    q3: float

    def __post_init__(self) -> None:
        if not (len(self.epochs) == len(self.values) == len(self.labels)):
            raise ValueError("epochs, values and labels must align 1:1")

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def near_wrap(self) -> np.ndarray:
        """Mask of values close to the 0/360 seam (always false for non-angles)."""
        if self.element not in WRAPPING_ELEMENTS:
            return np.zeros(len(self.values), dtype=bool)
        return (self.values <= NEAR_WRAP_MARGIN) | (self.values >= 360.0 - NEAR_WRAP_MARGIN)


def label_series(
    series: EphemerisSeries,
    window: PeriodWindow | None = None,
    elements: tuple[str, ...] = ELEMENT_NAMES,
) -> list[LabelTable]:
    """IQR labels for one object, one table per element.

    Windows with fewer than four observations are skipped with a warning
    rather than raising, so population-wide labeling can continue.
    """
    sub = series.in_window(window) if window is not None else series
    window_name = window.name if window is not None else "all"
    if len(sub) < MIN_LABEL_POINTS:
        log.warning(
            "skipping labels for %d in window %s: %d observation(s), need %d",
            series.norad_id, window_name, len(sub), MIN_LABEL_POINTS,
        )
        return []
    matrix = sub.matrix()
    epochs = sub.epochs()
    tables = []
    for name in elements:
        col = matrix[:, ELEMENT_NAMES.index(name)]
        q1, q3 = quartiles(col)
        tables.append(
            LabelTable(
                norad_id=series.norad_id,
                element=name,
                window=window_name,
                epochs=epochs,
                values=col,
                labels=iqr_outliers(col),
                q1=q1,
                q3=q3,
            )
        )
    return tables


def label_population(
    series_map: dict[int, EphemerisSeries],
    window: PeriodWindow | None = None,
    elements: tuple[str, ...] = ELEMENT_NAMES,
) -> list[LabelTable]:
    """Labels for every object in the map, in catalog-number order."""
    tables: list[LabelTable] = []
    for norad_id in sorted(series_map):
        tables.extend(label_series(series_map[norad_id], window=window, elements=elements))
    return tables
