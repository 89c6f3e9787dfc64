"""Detection metrics and the two-period contingency test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .windows import PeriodWindow


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp, fp=self.fp + other.fp,
            fn=self.fn + other.fn, tn=self.tn + other.tn,
        )


def confusion(labels, flags) -> ConfusionCounts:
    """Counts with the labels as truth and the flags as predictions."""
    y = np.asarray(labels, dtype=bool)
    p = np.asarray(flags, dtype=bool)
    if y.shape != p.shape:
        raise ValueError(f"labels {y.shape} and flags {p.shape} must align")
    return ConfusionCounts(
        tp=int(np.sum(y & p)),
        fp=int(np.sum(~y & p)),
        fn=int(np.sum(y & ~p)),
        tn=int(np.sum(~y & ~p)),
    )


def f1_score(c: ConfusionCounts) -> float:
    """f1 = 2tp / (2tp + fp + fn), defined as 0 when the denominator is 0."""
    denom = 2 * c.tp + c.fp + c.fn
    return 0.0 if denom == 0 else 2.0 * c.tp / denom


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise ValueError("accuracy undefined for empty counts")
    return (c.tp + c.tn) / c.total


def anomaly_rate(flags, epochs=None, window: PeriodWindow | None = None) -> float:
    """Fraction of flagged observations, optionally restricted to a window."""
    arr = np.asarray(flags, dtype=bool)
    if window is not None:
        if epochs is None:
            raise ValueError("a window requires matching epochs")
        keep = np.array([window.contains(t) for t in epochs], dtype=bool)
        arr = arr[keep]
    if arr.size == 0:
        raise ValueError("anomaly rate undefined over zero observations")
    return float(arr.mean())


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Anomalous/total observation counts for two periods."""

    anomalies_a: int
    total_a: int
    anomalies_b: int
    total_b: int

    def __post_init__(self) -> None:
        for label, anoms, total in (
            ("a", self.anomalies_a, self.total_a),
            ("b", self.anomalies_b, self.total_b),
        ):
            if total <= 0:
                raise ValueError(f"period {label}: total must be positive")
            if not 0 <= anoms <= total:
                raise ValueError(f"period {label}: anomalies must lie in [0, total]")

    def cells(self) -> np.ndarray:
        return np.array(
            [
                [self.anomalies_a, self.total_a - self.anomalies_a],
                [self.anomalies_b, self.total_b - self.anomalies_b],
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    p_value: float
    statistic_uncorrected: float
    dof: int = 1

    @property
    def p_label(self) -> str:
        return "< 0.001" if self.p_value < 0.001 else f"{self.p_value:.3g}"


def _regularized_gamma_q(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a) by series (x < a+1) or continued fraction."""
    if x < 0 or a <= 0:
        raise ValueError("requires x >= 0 and a > 0")
    if x == 0.0:
        return 1.0
    log_prefix = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # series for P(a, x), then Q = 1 - P
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(500):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return 1.0 - total * math.exp(log_prefix)
    # modified Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(log_prefix) * h


def chi2_sf(x: float, dof: int = 1) -> float:
    """Chi-square survival function; underflows to 0.0 for huge statistics."""
    if x < 0:
        raise ValueError("chi-square statistic must be non-negative")
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    return _regularized_gamma_q(dof / 2.0, x / 2.0)


def chi_square_2x2(table: ContingencyTable2x2) -> Chi2Result:
    """2x2 test of anomaly-rate homogeneity with Yates continuity correction.

    The uncorrected statistic is reported alongside so both conventions are
    visible when cross-checking published figures.
    """
    observed = table.cells()
    row = observed.sum(axis=1)
    col = observed.sum(axis=0)
    n = observed.sum()
    if (col == 0).any():
        raise ValueError("a zero marginal leaves an expected count of zero")
    expected = np.outer(row, col) / n
    adj = np.maximum(np.abs(observed - expected) - 0.5, 0.0)
    statistic = float((adj ** 2 / expected).sum())
    uncorrected = float(((observed - expected) ** 2 / expected).sum())
    return Chi2Result(
        statistic=statistic,
        p_value=chi2_sf(statistic, dof=1),
        statistic_uncorrected=uncorrected,
    )
