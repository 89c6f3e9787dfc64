"""End-to-end orchestration: ingest, label, train, score, evaluate, stats.

Every command writes its outputs plus a manifest (config hash, seed, input
digests). Reports are deterministic byte-for-byte for a fixed config and
seed: workers only change wall time, object iteration is always sorted, and
manifests are the only files carrying timestamps.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__, analytics, anchor_ae, model_store, outliers, sweeps, synthetic
from .anchor_ae import InsufficientDataError, ModelConfig
from .elements import ELEMENT_NAMES, WRAPPING_ELEMENTS, EphemerisSeries
from .isolation_forest import IForestConfig
from .metrics import ContingencyTable2x2, chi_square_2x2
from .outliers import label_population
from .satcat import (MissionClass, ObjectType, SelectionCriteria, assign_mission_class,
                     load_mission_map, load_satcat, select_rsos)
from .synthetic import GeneratedCorpus, ScenarioConfig, corpus_text, generate, mask_rows
from .tle import IngestResult, load_tle_file
from .windows import REQUIRED_DISJOINT, PeriodWindow
from .sweeps import FAMILIES, sub_seed

log = logging.getLogger(__name__)

SCHEMAS = {
    "ingest_summary": 1,
    "elements": 1,
    "labels": 1,
    "training_summary": 1,
    "verdicts": 1,
    "grid_results": 1,
    "temporal_eval": 1,
    "chi2": 1,
    "monthly_counts": 1,
    "diffs_summary": 1,
    "diff_percent_change": 1,
    "correlations": 1,
    "plotdata": 1,
    "masks": 1,
}


class ConfigError(ValueError):
    """The run configuration is unusable; nothing was executed."""


class DataError(ValueError):
    """Inputs were readable but unusable (empty, missing, inconsistent)."""


# --- run configuration ----------------------------------------------------------

@dataclass
class RunConfig:
    out_dir: str
    seed: int = 0
    workers: int = 1
    tle_path: str | None = None
    satcat_path: str | None = None
    mission_primary_path: str | None = None
    mission_secondary_path: str | None = None
    windows: dict[str, PeriodWindow] = field(default_factory=dict)
    selection: SelectionCriteria = field(default_factory=SelectionCriteria)
    model: ModelConfig = field(default_factory=ModelConfig)
    iforest: IForestConfig = field(default_factory=IForestConfig)
    iforest_mode: str = "per_element"
    train_window: str = "train"
    temporal_durations_days: tuple[float, ...] | None = None
    temporal_families: tuple[str, ...] = FAMILIES
    temporal_eval_window: str = "leadup"
    client: dict | None = None
    fetch_ids: tuple[int, ...] = ()
    raw: dict = field(default_factory=dict)

    def window(self, name: str) -> PeriodWindow:
        try:
            return self.windows[name]
        except KeyError:
            raise ConfigError(
                f"window {name!r} is not defined; have {sorted(self.windows)}"
            ) from None


def _parse_window(name: str, bounds, context: str) -> PeriodWindow:
    if not isinstance(bounds, (list, tuple)) or len(bounds) != 2:
        raise ConfigError(f"{context}: window {name!r} must be a [start, end] pair")
    try:
        start = datetime.fromisoformat(bounds[0])
        end = datetime.fromisoformat(bounds[1])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: window {name!r}: {exc}") from None
    if start.tzinfo is None:
        start = start.replace(tzinfo=timezone.utc)
    if end.tzinfo is None:
        end = end.replace(tzinfo=timezone.utc)
    try:
        return PeriodWindow(name=name, start=start, end=end)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from None


def load_run_config(path, out_dir=None, workers=None, seed=None) -> RunConfig:
    """Parse and validate a run config file; CLI overrides win over file values."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None

    windows = {
        name: _parse_window(name, bounds, f"config {path}")
        for name, bounds in sorted(data.get("windows", {}).items())
    }
    for a, b in REQUIRED_DISJOINT:
        if a in windows and b in windows and windows[a].overlaps(windows[b]):
            raise ConfigError(f"windows {a!r} and {b!r} must not overlap")

    sel_data = dict(data.get("selection", {}))
    count_window = sel_data.pop("count_window", None)
    activity = sel_data.pop("activity_window", None)
    try:
        excluded = frozenset(
            ObjectType(t.upper()) for t in sel_data.pop("excluded_object_types", ["DEBRIS"])
        )
        selection = SelectionCriteria(
            owner_codes=frozenset(sel_data.pop("owner_codes", ["CIS"])),
            excluded_object_types=excluded,
            activity_window=(
                _parse_window("activity", activity, f"config {path}") if activity else None
            ),
            min_obs_window=(windows[count_window] if count_window else None),
            **sel_data,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"config {path}: bad selection block: {exc}") from None

    try:
        model = ModelConfig(**data.get("model", {}))
        iforest = IForestConfig(**data.get("iforest", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config {path}: bad model/iforest block: {exc}") from None

    iforest_mode = data.get("iforest_mode", "per_element")
    if iforest_mode not in sweeps.IFOREST_MODES:
        raise ConfigError(f"config {path}: iforest_mode must be one of {sweeps.IFOREST_MODES}")

    temporal = data.get("temporal", {})
    families = tuple(temporal.get("families", FAMILIES))
    unknown = [f for f in families if f not in FAMILIES]
    if unknown:
        raise ConfigError(f"config {path}: unknown temporal families {unknown}")
    durations = temporal.get("durations_days")

    cfg = RunConfig(
        out_dir=str(out_dir if out_dir is not None else data.get("out_dir", "out")),
        seed=int(seed if seed is not None else data.get("seed", 0)),
        workers=int(workers if workers is not None else data.get("workers", 1)),
        tle_path=data.get("tle_path"),
        satcat_path=data.get("satcat_path"),
        mission_primary_path=data.get("mission_primary_path"),
        mission_secondary_path=data.get("mission_secondary_path"),
        windows=windows,
        selection=selection,
        model=model,
        iforest=iforest,
        iforest_mode=iforest_mode,
        train_window=data.get("train_window", "train"),
        temporal_durations_days=tuple(durations) if durations else None,
        temporal_families=families,
        temporal_eval_window=temporal.get("eval_window", "leadup"),
        client=data.get("client"),
        fetch_ids=tuple(data.get("fetch_ids", [])),
        raw=data,
    )
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    return cfg


# --- small shared helpers -------------------------------------------------------

def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_hash(cfg: RunConfig) -> str:
    doc = {
        "model": asdict(cfg.model),
        "iforest": asdict(cfg.iforest),
        "iforest_mode": cfg.iforest_mode,
        "seed": cfg.seed,
        "train_window": cfg.train_window,
        "selection": {
            "owner_codes": sorted(cfg.selection.owner_codes),
            "excluded_object_types": sorted(t.value for t in cfg.selection.excluded_object_types),
            "min_training_observations": cfg.selection.min_training_observations,
        },
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _write_manifest(cfg: RunConfig, command: str, inputs: dict, outputs: list[str],
                    started: datetime, extra: dict | None = None) -> None:
    doc = {
        "command": command,
        "config_hash": _config_hash(cfg),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "package_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "inputs": inputs,
        "outputs": sorted(outputs),
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        doc.update(extra)
    path = os.path.join(cfg.out_dir, f"manifest_{command}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, schema: str, fieldnames: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema: {schema}/{SCHEMAS[schema]}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in fieldnames])


def read_report_csv(path):
    """Read back a report CSV, skipping the schema comment line."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema:"):
            raise DataError(f"{path} is missing its schema line")
        return first.strip(), list(csv.DictReader(fh))


def _load_series(cfg: RunConfig) -> IngestResult:
    if not cfg.tle_path:
        raise ConfigError("config has no tle_path")
    if not os.path.exists(cfg.tle_path):
        raise ConfigError(f"tle_path {cfg.tle_path} does not exist")
    try:
        return load_tle_file(cfg.tle_path)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _selected_series(cfg: RunConfig) -> dict[int, EphemerisSeries]:
    result = _load_series(cfg)
    if not cfg.satcat_path:
        return dict(sorted(result.series.items()))
    if not os.path.exists(cfg.satcat_path):
        raise ConfigError(f"satcat_path {cfg.satcat_path} does not exist")
    satcat = load_satcat(cfg.satcat_path)
    chosen = select_rsos(satcat, result.series, cfg.selection)
    if not chosen:
        raise DataError("selection matched no objects")
    return {norad_id: result.series[norad_id] for norad_id in chosen}


def _mission_lookup(cfg: RunConfig) -> dict[int, str]:
    primary = load_mission_map(cfg.mission_primary_path) if cfg.mission_primary_path else {}
    secondary = load_mission_map(cfg.mission_secondary_path) if cfg.mission_secondary_path else {}
    ids = set(primary) | set(secondary)
    return {i: assign_mission_class(i, primary, secondary).value for i in ids}


def _mission_of(lookup: dict[int, str], norad_id: int) -> str:
    return lookup.get(norad_id, MissionClass.UNIDENTIFIED.value)


# --- synth ----------------------------------------------------------------------

def run_synth(scenario: ScenarioConfig, out_dir: str) -> GeneratedCorpus:
    """Generate a corpus plus the sidecar files the rest of the pipeline needs."""
    os.makedirs(out_dir, exist_ok=True)
    started = datetime.now(timezone.utc)
    corpus = generate(scenario)

    tle_path = os.path.join(out_dir, "corpus.tle")
    with open(tle_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(corpus_text(corpus))

    mask_path = os.path.join(out_dir, "masks.csv")
    _write_csv(mask_path, "masks",
               ["norad_id", "index", "epoch", *ELEMENT_NAMES], mask_rows(corpus))

    ids = scenario.norad_ids()
    n_real = scenario.object_count - scenario.distractor_count
    satcat_rows = []
    for idx, norad_id in enumerate(ids):
        if idx >= n_real:
            d = idx - n_real
            country = "CIS" if d % 2 == 0 else "US"
            object_type = "DEBRIS" if d % 2 == 0 else "PAYLOAD"
        else:
            country = "CIS"
            object_type = "PAYLOAD" if idx % 2 == 0 else "SATELLITE"
        satcat_rows.append({
            "norad_id": norad_id, "country": country, "object_type": object_type,
            "name": f"SYNTH-{idx + 1}",
            "launch_date": f"{scenario.start_epoch.year - 1}-01-01", "decay_date": "",
        })
    satcat_path = os.path.join(out_dir, "satcat.csv")
    with open(satcat_path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["norad_id", "country", "object_type", "name", "launch_date", "decay_date"])
        for row in satcat_rows:
            writer.writerow([row[c] for c in
                             ("norad_id", "country", "object_type", "name", "launch_date", "decay_date")])

    labels = scenario.mission_labels or [MissionClass.UNIDENTIFIED.value]
    primary_rows, secondary_rows = [], []
    for idx, norad_id in enumerate(ids[:n_real]):
        label = labels[idx % len(labels)]
        if idx % 3 == 0:
            primary_rows.append((norad_id, label))
            # one overlapping entry to exercise primary-over-secondary precedence
            if idx == 0 and len(labels) > 1:
                secondary_rows.append((norad_id, labels[1 % len(labels)]))
        elif idx % 3 == 1:
            secondary_rows.append((norad_id, label))
        # idx % 3 == 2 stays unmapped and resolves to "unidentified"
    for name, rows in (("missions_primary.csv", primary_rows),
                       ("missions_secondary.csv", secondary_rows)):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["norad_id", "mission_class"])
            writer.writerows(rows)

    synthetic.save_scenario(scenario, os.path.join(out_dir, "scenario.json"))

    placeholder = RunConfig(out_dir=out_dir, seed=scenario.seed)
    _write_manifest(
        placeholder, "synth", inputs={},
        outputs=["corpus.tle", "masks.csv", "satcat.csv", "missions_primary.csv",
                 "missions_secondary.csv", "scenario.json"],
        started=started,
        extra={"objects": scenario.object_count,
               "observations": scenario.object_count * scenario.observations_per_object},
    )
    return corpus


# --- ingest ---------------------------------------------------------------------

def run_ingest(cfg: RunConfig) -> IngestResult:
    started = datetime.now(timezone.utc)
    os.makedirs(cfg.out_dir, exist_ok=True)
    result = _load_series(cfg)

    rows = []
    for norad_id in sorted(result.series):
        for rec in result.series[norad_id].observations:
            rows.append({
                "norad_id": norad_id,
                "epoch": rec.epoch.isoformat(),
                **{name: getattr(rec.elements, name) for name in ELEMENT_NAMES},
            })
    elements_path = os.path.join(cfg.out_dir, "elements.csv")
    _write_csv(elements_path, "elements", ["norad_id", "epoch", *ELEMENT_NAMES], rows)

    summary = {
        "schema": f"ingest_summary/{SCHEMAS['ingest_summary']}",
        "objects": result.object_count,
        "records": result.record_count,
        "rejected": len(result.rejected),
        "rejected_detail": [{"line": line, "reason": reason} for line, reason in result.rejected],
        "checksum_warnings": result.checksum_warnings,
        "per_object_counts": {str(n): len(s) for n, s in sorted(result.series.items())},
    }
    summary_path = os.path.join(cfg.out_dir, "ingest_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _write_manifest(cfg, "ingest", inputs={cfg.tle_path: _sha256_file(cfg.tle_path)},
                    outputs=["elements.csv", "ingest_summary.json"], started=started)
    return result


# --- label ----------------------------------------------------------------------

def run_label(cfg: RunConfig, window_names: list[str] | None = None) -> list[str]:
    started = datetime.now(timezone.utc)
    os.makedirs(cfg.out_dir, exist_ok=True)
    series_map = _selected_series(cfg)
    names = window_names or sorted(cfg.windows)
    outputs = []
    for name in names:
        window = cfg.window(name)
        tables = label_population(series_map, window=window)
        rows = []
        for table in tables:
            near = table.near_wrap()
            for i, epoch in enumerate(table.epochs):
                rows.append({
                    "norad_id": table.norad_id,
                    "element": table.element,
                    "epoch": epoch.isoformat(),
                    "value": float(table.values[i]),
                    "is_outlier": bool(table.labels[i]),
                    "near_wrap": bool(near[i]),
                })
        path = os.path.join(cfg.out_dir, f"labels_{name}.csv")
        _write_csv(path, "labels",
                   ["norad_id", "element", "epoch", "value", "is_outlier", "near_wrap"], rows)
        outputs.append(os.path.basename(path))
    _write_manifest(cfg, "label",
                    inputs={cfg.tle_path: _sha256_file(cfg.tle_path)},
                    outputs=outputs, started=started)
    return outputs


# --- train ----------------------------------------------------------------------

def _train_worker(args: tuple) -> dict:
    (norad_id, matrix, epochs_iso, cfg_dict, min_rows, model_path,
     config_hash, window_name, force) = args
    cfg = ModelConfig(**cfg_dict)
    digest = hashlib.sha256(
        matrix.tobytes() + "|".join(epochs_iso).encode()
    ).hexdigest()

    if not force and os.path.exists(model_path):
        try:
            existing = model_store.load_model(model_path)
        except model_store.ModelFormatError:
            existing = None
        if (existing is not None
                and existing.metadata.get("config_hash") == config_hash
                and existing.metadata.get("input_digest") == digest):
            return {"norad_id": norad_id, "status": "cached",
                    "rows": existing.metadata.get("rows"),
                    "final_loss": existing.metadata.get("final_loss"), "reason": ""}

    try:
        model = anchor_ae.train(matrix, cfg, norad_id=norad_id, min_rows=min_rows)
    except InsufficientDataError as exc:
        return {"norad_id": norad_id, "status": "skipped", "rows": int(matrix.shape[0]),
                "final_loss": None, "reason": str(exc)}
    except RuntimeError as exc:
        return {"norad_id": norad_id, "status": "failed", "rows": int(matrix.shape[0]),
                "final_loss": None, "reason": str(exc)}
    model.metadata.update({
        "config_hash": config_hash, "input_digest": digest, "window": window_name,
    })
    model_store.save_model(model, model_path)
    return {"norad_id": norad_id, "status": "trained", "rows": model.metadata["rows"],
            "final_loss": model.metadata["final_loss"], "reason": ""}


def _run_jobs(jobs: list[tuple], worker, workers: int) -> list:
    """Run jobs preserving submission order; workers never change the result list."""
    if workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs, chunksize=1))


def run_train(cfg: RunConfig, window_name: str | None = None, force: bool = False) -> list[dict]:
    started = datetime.now(timezone.utc)
    window_name = window_name or cfg.train_window
    window = cfg.window(window_name)
    series_map = _selected_series(cfg)
    models_dir = os.path.join(cfg.out_dir, "models")
    os.makedirs(models_dir, exist_ok=True)
    config_hash = _config_hash(cfg)

    jobs = []
    for norad_id in sorted(series_map):
        sub = series_map[norad_id].in_window(window)
        jobs.append((
            norad_id,
            sub.matrix(),
            [t.isoformat() for t in sub.epochs()],
            asdict(replace(cfg.model, seed=sub_seed(cfg.seed, norad_id))),
            cfg.selection.min_training_observations,
            os.path.join(models_dir, f"{norad_id}.json"),
            config_hash,
            window_name,
            force,
        ))
    results = _run_jobs(jobs, _train_worker, cfg.workers)

    summary_path = os.path.join(cfg.out_dir, "training_summary.csv")
    _write_csv(summary_path, "training_summary",
               ["norad_id", "status", "rows", "final_loss", "reason"], results)
    _write_manifest(
        cfg, "train",
        inputs={cfg.tle_path: _sha256_file(cfg.tle_path)},
        outputs=["training_summary.csv"] + [f"models/{r['norad_id']}.json" for r in results
                                            if r["status"] in ("trained", "cached")],
        started=started,
        extra={"window": window_name,
               "trained": sum(r["status"] == "trained" for r in results),
               "cached": sum(r["status"] == "cached" for r in results),
               "skipped": sum(r["status"] == "skipped" for r in results),
               "failed": sum(r["status"] == "failed" for r in results)},
    )
    return results


# --- score ----------------------------------------------------------------------

def _score_worker(args: tuple) -> list[dict]:
    norad_id, matrix, epochs_iso, model_path = args
    model = model_store.load_model(model_path)
    E, flags, knn = anchor_ae.score_matrix(model, matrix)
    rows = []
    for i in range(matrix.shape[0]):
        rows.append({
            "schema": f"verdicts/{SCHEMAS['verdicts']}",
            "norad_id": norad_id,
            "epoch": epochs_iso[i],
            "values": {name: float(matrix[i, j]) for j, name in enumerate(ELEMENT_NAMES)},
            "errors": {name: float(E[i, j]) for j, name in enumerate(ELEMENT_NAMES)},
            "flags": {name: bool(flags[i, j]) for j, name in enumerate(ELEMENT_NAMES)},
            "latent_knn_distance": float(knn[i]),
            "any_flag": bool(flags[i].any()),
        })
    return rows


def run_score(cfg: RunConfig, window_name: str) -> str:
    started = datetime.now(timezone.utc)
    window = cfg.window(window_name)
    series_map = _selected_series(cfg)
    models_dir = os.path.join(cfg.out_dir, "models")

    jobs = []
    missing = []
    for norad_id in sorted(series_map):
        model_path = os.path.join(models_dir, f"{norad_id}.json")
        if not os.path.exists(model_path):
            missing.append(norad_id)
            continue
        sub = series_map[norad_id].in_window(window)
        if len(sub) == 0:
            continue
        jobs.append((norad_id, sub.matrix(), [t.isoformat() for t in sub.epochs()], model_path))
    if missing:
        log.warning("no model for %d object(s): %s", len(missing), missing[:10])
    if not jobs:
        raise DataError(f"no scorable observations in window {window_name!r}")

    results = _run_jobs(jobs, _score_worker, cfg.workers)
    path = os.path.join(cfg.out_dir, f"verdicts_{window_name}.jsonl")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rows in results:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True))
                fh.write("\n")
    _write_manifest(cfg, f"score_{window_name}",
                    inputs={cfg.tle_path: _sha256_file(cfg.tle_path)},
                    outputs=[os.path.basename(path)], started=started,
                    extra={"window": window_name, "missing_models": missing})
    return path


def load_verdicts(path) -> list[dict]:
    if not os.path.exists(path):
        raise DataError(f"verdicts file {path} does not exist; run score first")
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


# --- evaluate -------------------------------------------------------------------

def run_evaluate(cfg: RunConfig, grid_path: str | None = None, temporal: bool = False) -> list[str]:
    started = datetime.now(timezone.utc)
    os.makedirs(cfg.out_dir, exist_ok=True)
    series_map = _selected_series(cfg)
    outputs = []
    inputs = {cfg.tle_path: _sha256_file(cfg.tle_path)}

    if grid_path is not None:
        if not os.path.exists(grid_path):
            raise ConfigError(f"grid file {grid_path} does not exist")
        with open(grid_path, "r", encoding="utf-8") as fh:
            try:
                spec_doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"grid file {grid_path}: {exc}") from None
        family = spec_doc.get("family")
        if family not in FAMILIES:
            raise ConfigError(f"grid file {grid_path}: family must be one of {FAMILIES}")
        train_w = cfg.window(spec_doc.get("train_window", cfg.train_window))
        eval_w = cfg.window(spec_doc.get("eval_window", cfg.temporal_eval_window))
        subset = spec_doc.get("subset")
        chosen = series_map
        if subset:
            chosen = {int(n): series_map[int(n)] for n in subset if int(n) in series_map}
            if not chosen:
                raise DataError("grid subset matched no selected objects")
        results = sweeps.grid_search(
            family, spec_doc.get("grid", {}), chosen, train_w, eval_w,
            seed=cfg.seed, base_model=cfg.model, base_forest=cfg.iforest,
            iforest_mode=cfg.iforest_mode,
            min_rows=cfg.selection.min_training_observations,
        )
        rows = [{
            "rank": rank,
            "family": r.family,
            "params": json.dumps(r.params, sort_keys=True),
            "mean_f1": r.mean_f1,
            "n_objects": len(r.per_rso_f1),
            "n_skipped": len(r.skipped),
        } for rank, r in enumerate(results, start=1)]
        path = os.path.join(cfg.out_dir, "grid_results.csv")
        _write_csv(path, "grid_results",
                   ["rank", "family", "params", "mean_f1", "n_objects", "n_skipped"], rows)
        outputs.append(os.path.basename(path))
        inputs[grid_path] = _sha256_file(grid_path)

    if temporal:
        eval_w = cfg.window(cfg.temporal_eval_window)
        train_end = cfg.window(cfg.train_window).end
        rows_t = sweeps.temporal_window_eval(
            series_map, train_end, eval_w,
            durations_days=cfg.temporal_durations_days,
            families=cfg.temporal_families, seed=cfg.seed,
            base_model=cfg.model, base_forest=cfg.iforest,
            iforest_mode=cfg.iforest_mode,
            min_rows=cfg.selection.min_training_observations,
        )
        rows = [{
            "window": r.window_name, "train_days": r.train_days, "family": r.family,
            "accuracy": r.accuracy, "f1": r.f1, "n_eval": r.n_eval,
            "skipped": r.skipped, "reason": r.reason,
        } for r in rows_t]
        path = os.path.join(cfg.out_dir, "temporal_eval.csv")
        _write_csv(path, "temporal_eval",
                   ["window", "train_days", "family", "accuracy", "f1", "n_eval",
                    "skipped", "reason"], rows)
        outputs.append(os.path.basename(path))

    if not outputs:
        raise ConfigError("evaluate needs --grid and/or --temporal")
    _write_manifest(cfg, "evaluate", inputs=inputs, outputs=outputs, started=started)
    return outputs


# --- stats ----------------------------------------------------------------------

def _verdict_path(cfg: RunConfig, window_name: str) -> str:
    return os.path.join(cfg.out_dir, f"verdicts_{window_name}.jsonl")


def _all_verdicts(cfg: RunConfig) -> list[dict]:
    """Union of every scored window, deduplicated on (object, epoch)."""
    seen = {}
    for name in sorted(cfg.windows):
        path = _verdict_path(cfg, name)
        if not os.path.exists(path):
            continue
        for row in load_verdicts(path):
            seen.setdefault((row["norad_id"], row["epoch"]), row)
    if not seen:
        raise DataError("no verdict files found; run score first")
    return [seen[k] for k in sorted(seen)]


def _diff_rows_by_object(verdicts: list[dict]):
    """Consecutive-observation deltas keyed by object, flag taken from the newer row."""
    by_object: dict[int, list[dict]] = {}
    for row in verdicts:
        by_object.setdefault(row["norad_id"], []).append(row)
    for norad_id, rows in sorted(by_object.items()):
        rows.sort(key=lambda r: r["epoch"])
        for prev, cur in zip(rows, rows[1:]):
            deltas = {}
            for name in ELEMENT_NAMES:
                raw = cur["values"][name] - prev["values"][name]
                deltas[name] = {"raw": raw}
                if name in WRAPPING_ELEMENTS:
                    deltas[name]["wrapped"] = analytics.wrap_delta(raw)
            yield norad_id, cur, deltas


def run_stats(
    cfg: RunConfig,
    chi2_pair: tuple[str, str] | None = None,
    monthly: bool = False,
    diffs: bool = False,
    corr: bool = False,
) -> list[str]:
    if not (chi2_pair or monthly or diffs or corr):
        raise ConfigError("stats needs at least one of --chi2/--monthly/--diffs/--corr")
    started = datetime.now(timezone.utc)
    os.makedirs(cfg.out_dir, exist_ok=True)
    outputs: list[str] = []
    inputs: dict[str, str] = {}
    plot_dir = os.path.join(cfg.out_dir, "plotdata")
    mission_lookup = _mission_lookup(cfg) if (monthly or diffs or corr) else {}

    if chi2_pair is not None:
        name_a, name_b = chi2_pair
        counts = {}
        for name in (name_a, name_b):
            path = _verdict_path(cfg, name)
            rows = load_verdicts(path)
            counts[name] = (sum(1 for r in rows if r["any_flag"]), len(rows))
            inputs[path] = _sha256_file(path)
        table = ContingencyTable2x2(
            anomalies_a=counts[name_a][0], total_a=counts[name_a][1],
            anomalies_b=counts[name_b][0], total_b=counts[name_b][1],
        )
        result = chi_square_2x2(table)
        doc = {
            "schema": f"chi2/{SCHEMAS['chi2']}",
            "window_a": name_a, "window_b": name_b,
            "anomalies_a": table.anomalies_a, "total_a": table.total_a,
            "rate_a": table.anomalies_a / table.total_a,
            "anomalies_b": table.anomalies_b, "total_b": table.total_b,
            "rate_b": table.anomalies_b / table.total_b,
            "statistic": result.statistic,
            "statistic_uncorrected": result.statistic_uncorrected,
            "p_value": result.p_value,
            "p_label": result.p_label,
            "dof": result.dof,
        }
        path = os.path.join(cfg.out_dir, f"chi2_{name_a}_vs_{name_b}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(os.path.basename(path))

    if monthly or diffs or corr:
        verdicts = _all_verdicts(cfg)

    if monthly:
        events = [
            (datetime.fromisoformat(r["epoch"]), _mission_of(mission_lookup, r["norad_id"]))
            for r in verdicts if r["any_flag"]
        ]
        events += [(t, "all_missions") for t, _ in events[:]]
        rows = analytics.monthly_counts(events)
        out_rows = [{
            "group": r.group, "month": r.month, "count": r.count, "change": r.change,
            "pct_change": r.pct_change, "exceeds_mean": r.exceeds_mean,
        } for r in rows]
        path = os.path.join(cfg.out_dir, "monthly_counts.csv")
        _write_csv(path, "monthly_counts",
                   ["group", "month", "count", "change", "pct_change", "exceeds_mean"], out_rows)
        outputs.append(os.path.basename(path))

        os.makedirs(plot_dir, exist_ok=True)
        groups: dict[str, dict] = {}
        for r in rows:
            g = groups.setdefault(r.group, {"months": [], "counts": []})
            g["months"].append(r.month)
            g["counts"].append(r.count)
        plot_path = os.path.join(plot_dir, "monthly_counts.json")
        with open(plot_path, "w", encoding="utf-8") as fh:
            json.dump({"schema": f"plotdata/{SCHEMAS['plotdata']}", "groups": groups},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(os.path.join("plotdata", "monthly_counts.json"))

    if diffs:
        # distribution of per-element deltas at anomalous observations
        anomalous: dict[tuple[str, str, str], list[float]] = {}
        for norad_id, cur, deltas in _diff_rows_by_object(verdicts):
            if not cur["any_flag"]:
                continue
            mission = _mission_of(mission_lookup, norad_id)
            for name in ELEMENT_NAMES:
                for column, value in deltas[name].items():
                    anomalous.setdefault((mission, name, column), []).append(value)
        rows = []
        for (mission, element, column), values in sorted(anomalous.items()):
            arr = np.asarray(values, dtype=np.float64)
            q1, q3 = (outliers.quartiles(arr) if arr.size >= 4 else (None, None))
            rows.append({
                "mission": mission, "element": element, "column": column,
                "count": int(arr.size), "mean": float(arr.mean()), "std": float(arr.std()),
                "min": float(arr.min()), "q1": q1, "median": float(np.median(arr)),
                "q3": q3, "max": float(arr.max()),
            })
        path = os.path.join(cfg.out_dir, "diffs_summary.csv")
        _write_csv(path, "diffs_summary",
                   ["mission", "element", "column", "count", "mean", "std",
                    "min", "q1", "median", "q3", "max"], rows)
        outputs.append(os.path.basename(path))

        # window-over-window percent change of mean deltas per mission/element
        pair = chi2_pair or (("baseline", "leadup")
                             if {"baseline", "leadup"} <= set(cfg.windows) else None)
        if pair is not None and all(os.path.exists(_verdict_path(cfg, w)) for w in pair):
            means: dict[str, dict[tuple[str, str], float]] = {}
            for wname in pair:
                acc: dict[tuple[str, str], list[float]] = {}
                for norad_id, cur, deltas in _diff_rows_by_object(
                        load_verdicts(_verdict_path(cfg, wname))):
                    mission = _mission_of(mission_lookup, norad_id)
                    for name in ELEMENT_NAMES:
                        column = "wrapped" if name in WRAPPING_ELEMENTS else "raw"
                        acc.setdefault((mission, name), []).append(deltas[name][column])
                means[wname] = {k: float(np.mean(v)) for k, v in acc.items()}
            keys = sorted(set(means[pair[0]]) & set(means[pair[1]]))
            rows = []
            for mission, element in keys:
                old = means[pair[0]][(mission, element)]
                new = means[pair[1]][(mission, element)]
                rows.append({
                    "mission": mission, "element": element,
                    "window_a": pair[0], "window_b": pair[1],
                    "mean_diff_a": old, "mean_diff_b": new,
                    "pct_change": analytics.percent_change(old, new),
                })
            path = os.path.join(cfg.out_dir, "diff_percent_change.csv")
            _write_csv(path, "diff_percent_change",
                       ["mission", "element", "window_a", "window_b",
                        "mean_diff_a", "mean_diff_b", "pct_change"], rows)
            outputs.append(os.path.basename(path))

        os.makedirs(plot_dir, exist_ok=True)
        dist = {}
        for (mission, element, column), values in sorted(anomalous.items()):
            if column != ("wrapped" if element in WRAPPING_ELEMENTS else "raw"):
                continue
            dist.setdefault(element, []).extend(values)
        plot_doc = {"schema": f"plotdata/{SCHEMAS['plotdata']}", "elements": {}}
        for element, values in sorted(dist.items()):
            arr = np.asarray(values, dtype=np.float64)
            q1, q3 = (outliers.quartiles(arr) if arr.size >= 4 else (None, None))
            plot_doc["elements"][element] = {
                "count": int(arr.size), "min": float(arr.min()), "q1": q1,
                "median": float(np.median(arr)), "q3": q3, "max": float(arr.max()),
            }
        plot_path = os.path.join(plot_dir, "diff_distributions.json")
        with open(plot_path, "w", encoding="utf-8") as fh:
            json.dump(plot_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(os.path.join("plotdata", "diff_distributions.json"))

    if corr:
        by_group: dict[tuple[str, str], list[list[float]]] = {}
        for row in verdicts:
            mission = _mission_of(mission_lookup, row["norad_id"])
            regime = analytics.regime_of(row["values"]["mean_motion"]).value
            by_group.setdefault((mission, regime), []).append(
                [row["values"][name] for name in ELEMENT_NAMES]
            )
        rows = []
        plot_doc = {"schema": f"plotdata/{SCHEMAS['plotdata']}", "groups": {}}
        for (mission, regime), samples in sorted(by_group.items()):
            matrix = np.asarray(samples, dtype=np.float64)
            corr_matrix = analytics.element_correlations(matrix)
            plot_doc["groups"][f"{mission}|{regime}"] = corr_matrix
            for i, el_a in enumerate(ELEMENT_NAMES):
                for j, el_b in enumerate(ELEMENT_NAMES):
                    if j <= i:
                        continue
                    rows.append({
                        "mission": mission, "regime": regime,
                        "element_a": el_a, "element_b": el_b,
                        "r": corr_matrix[i][j], "n": matrix.shape[0],
                    })
        path = os.path.join(cfg.out_dir, "correlations.csv")
        _write_csv(path, "correlations",
                   ["mission", "regime", "element_a", "element_b", "r", "n"], rows)
        outputs.append(os.path.basename(path))

        os.makedirs(plot_dir, exist_ok=True)
        plot_path = os.path.join(plot_dir, "correlations.json")
        with open(plot_path, "w", encoding="utf-8") as fh:
            json.dump(plot_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(os.path.join("plotdata", "correlations.json"))

    _write_manifest(cfg, "stats", inputs=inputs, outputs=outputs, started=started)
    return outputs
