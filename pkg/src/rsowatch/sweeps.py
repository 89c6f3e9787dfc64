"""Hyperparameter grids and temporal training-window comparisons.

Every candidate is judged the same way: train on the training window, score
the evaluation window, compare per-element flags against IQR outlier labels
computed over that same evaluation window.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from datetime import timedelta

import numpy as np

from . import anchor_ae, isolation_forest, outliers
from .anchor_ae import InsufficientDataError, ModelConfig
from .elements import ELEMENT_NAMES, EphemerisSeries
from .isolation_forest import AUTO, IForestConfig
from .metrics import ConfusionCounts, accuracy, confusion, f1_score
from .windows import PeriodWindow

log = logging.getLogger(__name__)

FAMILIES = ("ae", "anchor_ae", "iforest")

#: Feature handling for the forest baseline: independent per-element fits by
#: default, or one joint fit over all six elements.
IFOREST_MODES = ("per_element", "joint6d")

TEMPORAL_YEARS = (1, 2, 3, 4, 5)


def sub_seed(seed: int, norad_id: int) -> int:
    """Per-object seed: global seed XOR catalog number, masked to 64 bits."""
    return (seed ^ norad_id) & 0xFFFFFFFFFFFFFFFF


def _eval_labels(eval_series: EphemerisSeries) -> np.ndarray:
    matrix = eval_series.matrix()
    labels = np.zeros(matrix.shape, dtype=bool)
    for j in range(matrix.shape[1]):
        labels[:, j] = outliers.iqr_outliers(matrix[:, j])
    return labels


def evaluate_rso(
    family: str,
    series: EphemerisSeries,
    train_window: PeriodWindow,
    eval_window: PeriodWindow,
    model_cfg: ModelConfig | None = None,
    iforest_cfg: IForestConfig | None = None,
    iforest_mode: str = "per_element",
    min_rows: int = anchor_ae.DEFAULT_MIN_TRAINING_ROWS,
) -> ConfusionCounts:
    """Pooled per-element confusion of one family on one object.

    In the forest's joint6d mode flags and labels are both collapsed to the
    observation level (an observation is an outlier when any element is).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}")
    if iforest_mode not in IFOREST_MODES:
        raise ValueError(f"unknown iforest mode {iforest_mode!r}")
    train_series = series.in_window(train_window)
    eval_series = series.in_window(eval_window)
    if len(train_series) < min_rows:
        raise InsufficientDataError(
            f"object {series.norad_id}: {len(train_series)} rows in {train_window.name}, "
            f"need {min_rows}"
        )
    if len(eval_series) < outliers.MIN_LABEL_POINTS:
        raise InsufficientDataError(
            f"object {series.norad_id}: {len(eval_series)} rows in {eval_window.name}, "
            f"need {outliers.MIN_LABEL_POINTS} for labels"
        )
    X_train = train_series.matrix()
    X_eval = eval_series.matrix()
    labels = _eval_labels(eval_series)

    if family in ("ae", "anchor_ae"):
        cfg = model_cfg or ModelConfig()
        if family == "ae":
            cfg = replace(cfg, lambda_anchor=0.0)
        model = anchor_ae.train(X_train, cfg, norad_id=series.norad_id, min_rows=min_rows)
        _, flags, _ = anchor_ae.score_matrix(model, X_eval)
        return confusion(labels.ravel(), flags.ravel())

    cfg = iforest_cfg or IForestConfig()
    if iforest_mode == "joint6d":
        forest = isolation_forest.fit(X_train, cfg)
        flags = isolation_forest.classify(forest, X_eval)
        return confusion(labels.any(axis=1), flags)
    flags = np.zeros(X_eval.shape, dtype=bool)
    for j in range(len(ELEMENT_NAMES)):
        col_cfg = replace(cfg, seed=(cfg.seed * 8191 + j) & 0xFFFFFFFF)
        forest = isolation_forest.fit(X_train[:, j : j + 1], col_cfg)
        flags[:, j] = isolation_forest.classify(forest, X_eval[:, j : j + 1])
    return confusion(labels.ravel(), flags.ravel())


@dataclass(frozen=True)
class GridResult:
    family: str
    params: dict
    mean_f1: float
    per_rso_f1: dict[int, float]
    skipped: tuple[int, ...] = ()


def expand_grid(grid: dict[str, list]) -> list[dict]:
    """Cartesian product of the grid axes, in deterministic axis order."""
    if not grid:
        return [{}]
    keys = sorted(grid)
    for key in keys:
        if not isinstance(grid[key], (list, tuple)) or len(grid[key]) == 0:
            raise ValueError(f"grid axis {key!r} must be a non-empty list")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _build_configs(family: str, params: dict, seed: int,
                   base_model: ModelConfig, base_forest: IForestConfig):
    if family == "iforest":
        forest_params = dict(params)
        contamination = forest_params.get("contamination")
        if contamination == AUTO:
            forest_params["contamination"] = AUTO
        return None, replace(base_forest, **forest_params, seed=seed)
    model = replace(base_model, **params, seed=seed)
    if family == "ae":
        model = replace(model, lambda_anchor=0.0)
    return model, None


def grid_search(
    family: str,
    grid: dict[str, list],
    series_map: dict[int, EphemerisSeries],
    train_window: PeriodWindow,
    eval_window: PeriodWindow,
    seed: int = 0,
    base_model: ModelConfig | None = None,
    base_forest: IForestConfig | None = None,
    iforest_mode: str = "per_element",
    min_rows: int = anchor_ae.DEFAULT_MIN_TRAINING_ROWS,
) -> list[GridResult]:
    """Mean-F1 ranking of every grid configuration over the object subset.

    The grid metric is the mean of per-object F1 (each object's confusion is
    pooled over its elements first). Results are sorted by descending mean F1
    with the parameter repr as a deterministic tiebreak.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}")
    base_model = base_model or ModelConfig()
    base_forest = base_forest or IForestConfig()
    results = []
    for params in expand_grid(grid):
        per_rso: dict[int, float] = {}
        skipped: list[int] = []
        for norad_id in sorted(series_map):
            model_cfg, forest_cfg = _build_configs(
                family, params, sub_seed(seed, norad_id), base_model, base_forest
            )
            try:
                counts = evaluate_rso(
                    family, series_map[norad_id], train_window, eval_window,
                    model_cfg=model_cfg, iforest_cfg=forest_cfg,
                    iforest_mode=iforest_mode, min_rows=min_rows,
                )
            except InsufficientDataError as exc:
                log.warning("grid: skipping %s (%s)", norad_id, exc)
                skipped.append(norad_id)
                continue
            per_rso[norad_id] = f1_score(counts)
        mean_f1 = float(np.mean(list(per_rso.values()))) if per_rso else 0.0
        results.append(GridResult(
            family=family, params=params, mean_f1=mean_f1,
            per_rso_f1=per_rso, skipped=tuple(skipped),
        ))
    results.sort(key=lambda r: (-r.mean_f1, repr(sorted(r.params.items()))))
    return results


@dataclass(frozen=True)
class TemporalRow:
    window_name: str
    train_days: float
    family: str
    accuracy: float | None
    f1: float | None
    n_eval: int
    skipped: bool = False
    reason: str = ""


def temporal_window_eval(
    series_map: dict[int, EphemerisSeries],
    train_end,
    eval_window: PeriodWindow,
    durations_days: tuple[float, ...] | None = None,
    families: tuple[str, ...] = FAMILIES,
    seed: int = 0,
    base_model: ModelConfig | None = None,
    base_forest: IForestConfig | None = None,
    iforest_mode: str = "per_element",
    min_rows: int = anchor_ae.DEFAULT_MIN_TRAINING_ROWS,
) -> list[TemporalRow]:
    """Nested training windows (1..5 years by default) against one eval window.

    Metrics are micro-pooled over every object and element. An object missing
    the row minimum inside a window is skipped for that window; if every
    object is skipped the row is marked skipped with the reason.
    """
    if durations_days is None:
        durations_days = tuple(365.25 * y for y in TEMPORAL_YEARS)
    base_model = base_model or ModelConfig()
    base_forest = base_forest or IForestConfig()
    rows: list[TemporalRow] = []
    for idx, days in enumerate(durations_days, start=1):
        window = PeriodWindow(
            name=f"window_{idx}", start=train_end - timedelta(days=days), end=train_end
        )
        for family in families:
            pooled = ConfusionCounts()
            reasons = []
            for norad_id in sorted(series_map):
                model_cfg, forest_cfg = _build_configs(
                    family, {}, sub_seed(seed, norad_id), base_model, base_forest
                )
                try:
                    pooled = pooled + evaluate_rso(
                        family, series_map[norad_id], window, eval_window,
                        model_cfg=model_cfg, iforest_cfg=forest_cfg,
                        iforest_mode=iforest_mode, min_rows=min_rows,
                    )
                except InsufficientDataError as exc:
                    reasons.append(str(exc))
            if pooled.total == 0:
                rows.append(TemporalRow(
                    window_name=window.name, train_days=days, family=family,
                    accuracy=None, f1=None, n_eval=0, skipped=True,
                    reason="; ".join(reasons) or "no evaluable objects",
                ))
            else:
                rows.append(TemporalRow(
                    window_name=window.name, train_days=days, family=family,
                    accuracy=accuracy(pooled), f1=f1_score(pooled), n_eval=pooled.total,
                ))
    return rows
