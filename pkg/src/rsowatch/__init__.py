"""Anomaly detection over per-object orbital element time series.

The library trains one small autoencoder per resident space object, flags
observations whose per-element reconstruction errors cross calibrated
thresholds, grounds evaluation in interquartile-range outlier labels, and
produces the downstream statistical reports (F1 grids, chi-square window
comparisons, monthly rollups, differencing and correlation summaries).
"""

__version__ = "0.1.0"

from .elements import ELEMENT_NAMES, WRAPPING_ELEMENTS, EphemerisSeries, OrbitalElements, TleRecord
from .windows import PeriodWindow, default_windows, utc
from .tle import TleParseError, checksum, load_tle_file, parse_tle, parse_tle_text
from .outliers import LabelTable, iqr_outliers, label_population, label_series, quartiles
from .anchor_ae import (
    AnomalyVerdict,
    InsufficientDataError,
    ModelConfig,
    TrainedModel,
    anchor_loss,
    score,
    train,
)
from .model_store import ModelFormatError, load_model, save_model
from .isolation_forest import IForestConfig, IsolationForest, classify, fit
from .isolation_forest import score as iforest_score
from .metrics import (
    Chi2Result,
    ConfusionCounts,
    ContingencyTable2x2,
    accuracy,
    anomaly_rate,
    chi_square_2x2,
    confusion,
    f1_score,
)
from .analytics import (
    Regime,
    diff_series,
    element_correlations,
    grouped_correlations,
    monthly_counts,
    pearson,
    percent_change,
    regime_of,
    series_diffs,
    wrap_delta,
)
from .satcat import (
    MissionClass,
    ObjectType,
    SatCatEntry,
    SelectionCriteria,
    assign_mission_class,
    load_mission_map,
    load_satcat,
    select_rsos,
)
from .synthetic import (
    ElementBaseline,
    GeneratedCorpus,
    Injection,
    ScenarioConfig,
    corpus_text,
    format_tle,
    generate,
    load_scenario,
    save_scenario,
)
from .sweeps import FAMILIES, GridResult, TemporalRow, grid_search, temporal_window_eval

__all__ = [
    "__version__",
    "ELEMENT_NAMES", "WRAPPING_ELEMENTS", "EphemerisSeries", "OrbitalElements", "TleRecord",
    "PeriodWindow", "default_windows", "utc",
    "TleParseError", "checksum", "load_tle_file", "parse_tle", "parse_tle_text",
    "LabelTable", "iqr_outliers", "label_population", "label_series", "quartiles",
    "AnomalyVerdict", "InsufficientDataError", "ModelConfig", "TrainedModel",
    "anchor_loss", "score", "train",
    "ModelFormatError", "load_model", "save_model",
    "IForestConfig", "IsolationForest", "classify", "fit", "iforest_score",
    "Chi2Result", "ConfusionCounts", "ContingencyTable2x2", "accuracy", "anomaly_rate",
    "chi_square_2x2", "confusion", "f1_score",
    "Regime", "diff_series", "element_correlations", "grouped_correlations",
    "monthly_counts", "pearson", "percent_change", "regime_of", "series_diffs", "wrap_delta",
    "MissionClass", "ObjectType", "SatCatEntry", "SelectionCriteria",
    "assign_mission_class", "load_mission_map", "load_satcat", "select_rsos",
    "ElementBaseline", "GeneratedCorpus", "Injection", "ScenarioConfig",
    "corpus_text", "format_tle", "generate", "load_scenario", "save_scenario",
    "FAMILIES", "GridResult", "TemporalRow", "grid_search", "temporal_window_eval",
]
