"""Scenario-driven synthetic TLE corpora with known anomaly masks.

The formatter here is written against the column layout directly (not by
inverting the parser) so the two sides can cross-check each other.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from datetime import datetime, timedelta, timezone

import numpy as np

from .elements import ELEMENT_NAMES, WRAPPING_ELEMENTS, EphemerisSeries, OrbitalElements, TleRecord
from .satcat import MissionClass
from .tle import epoch_decode, epoch_encode

log = logging.getLogger(__name__)

INJECTION_KINDS = ("step", "impulse", "ramp")

# Decimal places the TLE text format can carry per element. Generated values
# are quantized to these up front so the typed corpus and its text rendering
# agree exactly.
_DECIMALS = {
    "mean_motion": 8,
    "eccentricity": 7,
    "inclination": 4,
    "raan": 4,
    "arg_perigee": 4,
    "mean_anomaly": 4,
}

# Seed-stream tags so each random purpose draws from an independent stream.
_STREAM_EPOCHS = 1
_STREAM_NOISE = 2
_STREAM_SCHEDULE = 3


@dataclass(frozen=True)
class ElementBaseline:
    """Stationary behaviour of one element: level, Gaussian noise, linear drift."""

    level: float
    sigma: float
    drift_per_day: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


@dataclass(frozen=True)
class Injection:
    """One injected anomaly over a half-open [start, end) epoch range.

    ``magnitude_sigma`` is expressed in units of the target element's baseline
    noise sigma and must be positive; ``sign`` picks the direction. ``step``
    and ``impulse`` add the full offset over the range (an impulse is simply a
    one-observation range); ``ramp`` rises linearly to the full offset at the
    end of the range. ``norad_ids`` of None applies to every object.
    """

    start: datetime
    end: datetime
    element: str
    kind: str
    magnitude_sigma: float
    sign: int = 1
    norad_ids: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.element not in ELEMENT_NAMES:
            raise ValueError(f"unknown element {self.element!r}")
        if self.kind not in INJECTION_KINDS:
            raise ValueError(f"unknown injection kind {self.kind!r}")
        if not self.magnitude_sigma > 0:
            raise ValueError(f"magnitude_sigma must be positive, got {self.magnitude_sigma}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not self.start < self.end:
            raise ValueError("injection range start must precede end")


@dataclass
class ScenarioConfig:
    """Everything needed to generate one deterministic corpus."""

    object_count: int
    observations_per_object: int
    start_epoch: datetime
    cadence_per_day: float
    cadence_jitter: float = 0.1
    baselines: dict[str, ElementBaseline] = field(default_factory=dict)
    injections: list[Injection] = field(default_factory=list)
    seed: int = 0
    first_norad: int = 90001
    distractor_count: int = 0
    mission_labels: list[str] = field(default_factory=lambda: ["communications"])

    def __post_init__(self) -> None:
        if self.object_count <= 0:
            raise ValueError("object_count must be positive")
        if self.observations_per_object <= 0:
            raise ValueError("observations_per_object must be positive")
        if not self.cadence_per_day > 0:
            raise ValueError("cadence_per_day must be positive")
        if not 0 <= self.cadence_jitter < 1:
            raise ValueError("cadence_jitter must lie in [0, 1)")
        if self.distractor_count < 0 or self.distractor_count >= self.object_count:
            raise ValueError("distractor_count must lie in [0, object_count)")
        missing = [n for n in ELEMENT_NAMES if n not in self.baselines]
        if missing:
            raise ValueError(f"baselines missing for elements: {missing}")
        if self.start_epoch.tzinfo is None:
            raise ValueError("start_epoch must be timezone-aware")
        valid_labels = {m.value for m in MissionClass}
        bad = [lbl for lbl in self.mission_labels if lbl not in valid_labels]
        if bad:
            raise ValueError(f"mission_labels outside the closed label set: {bad}")

    def norad_ids(self) -> list[int]:
        return [self.first_norad + i for i in range(self.object_count)]


@dataclass
class GeneratedCorpus:
    scenario: ScenarioConfig
    series: dict[int, EphemerisSeries]
    masks: dict[int, dict[str, np.ndarray]]

    def mask_matrix(self, norad_id: int) -> np.ndarray:
        """N x 6 boolean mask in canonical element order."""
        per_el = self.masks[norad_id]
        return np.stack([per_el[name] for name in ELEMENT_NAMES], axis=1)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *key))))


def _quantize_epoch(epoch: datetime) -> datetime:
    yy, day = epoch_encode(epoch)
    return epoch_decode(yy, day)


def epoch_grid(scenario: ScenarioConfig, obj_index: int) -> list[datetime]:
    """The deterministic observation epochs for one object.

    Exposed separately so schedule builders can target exact observation
    ranges; :func:`generate` uses the identical grid.
    """
    rng = _rng(scenario.seed, _STREAM_EPOCHS, obj_index)
    base_dt = 1.0 / scenario.cadence_per_day
    epochs = []
    t = scenario.start_epoch
    for _ in range(scenario.observations_per_object):
        epochs.append(_quantize_epoch(t))
        jitter = scenario.cadence_jitter * rng.uniform(-1.0, 1.0)
        t = t + timedelta(days=base_dt * (1.0 + jitter))
    return epochs


def _wrap_or_clamp(name: str, value: float) -> float:
    if name in WRAPPING_ELEMENTS:
        value = value % 360.0
    elif name == "inclination":
        value = min(max(value, 0.0), 180.0)
    elif name == "eccentricity":
        value = min(max(value, 0.0), 0.9999999)
    elif name == "mean_motion":
        value = max(value, 1e-8)
    return value


def _quantize(name: str, value: float) -> float:
    q = round(value, _DECIMALS[name])
    if name in WRAPPING_ELEMENTS and q >= 360.0:
        q = 0.0
    if name == "inclination":
        q = min(q, 180.0)
    if name == "eccentricity":
        q = min(q, 0.9999999)
    if name == "mean_motion":
        q = max(q, 1e-8)
    return q


def generate(scenario: ScenarioConfig) -> GeneratedCorpus:
    """Generate the corpus: per-object series plus per-element anomaly masks.

    Masks are true exactly over the scheduled injection ranges, independent of
    whether the injected offset would be detectable after wrapping/clamping.
    """
    series: dict[int, EphemerisSeries] = {}
    masks: dict[int, dict[str, np.ndarray]] = {}
    for idx, norad_id in enumerate(scenario.norad_ids()):
        epochs = epoch_grid(scenario, idx)
        n = len(epochs)
        days = np.array(
            [(t - epochs[0]).total_seconds() / 86400.0 for t in epochs], dtype=np.float64
        )
        noise_rng = _rng(scenario.seed, _STREAM_NOISE, idx)
        values: dict[str, np.ndarray] = {}
        for name in ELEMENT_NAMES:
            base = scenario.baselines[name]
            values[name] = (
                base.level
                + base.drift_per_day * days
                + noise_rng.normal(0.0, base.sigma, size=n)
            )
        mask = {name: np.zeros(n, dtype=bool) for name in ELEMENT_NAMES}

        for inj in scenario.injections:
            if inj.norad_ids is not None and norad_id not in inj.norad_ids:
                continue
            hit = np.array([inj.start <= t < inj.end for t in epochs], dtype=bool)
            count = int(hit.sum())
            if count == 0:
                continue
            sigma = scenario.baselines[inj.element].sigma
            offset = inj.sign * inj.magnitude_sigma * sigma
            if inj.kind == "ramp":
                profile = np.arange(1, count + 1, dtype=np.float64) / count
            else:  # step and impulse carry the full offset over the range
                profile = np.ones(count, dtype=np.float64)
            values[inj.element][hit] += offset * profile
            mask[inj.element] |= hit

        records = []
        for i, epoch in enumerate(epochs):
            fields = {
                name: _quantize(name, _wrap_or_clamp(name, float(values[name][i])))
                for name in ELEMENT_NAMES
            }
            records.append(
                TleRecord(
                    norad_id=norad_id,
                    epoch=epoch,
                    elements=OrbitalElements(**fields),
                    classification="U",
                    intl_designator=f"{epochs[0].year % 100:02d}{(idx + 1) % 1000:03d}A",
                    element_set_number=999,
                    revolution_number=i % 100000,
                )
            )
        series[norad_id] = EphemerisSeries(norad_id=norad_id, observations=records)
        masks[norad_id] = mask
    return GeneratedCorpus(scenario=scenario, series=series, masks=masks)


# --- independent TLE formatting -------------------------------------------------

def _format_checksum(line: str) -> int:
    # Kept separate from the parser's checksum on purpose; tests cross-check them.
    total = 0
    for ch in line:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def format_tle(record: TleRecord) -> tuple[str, str]:
    """Render a record as its two 69-character lines.

    Raises ``ValueError`` for values the fixed-width columns cannot represent.
    """
    el = record.elements
    if not 0 < record.norad_id <= 99999:
        raise ValueError(f"catalog number {record.norad_id} not representable in 5 columns")
    if not 0 <= record.element_set_number <= 9999:
        raise ValueError(f"element set number {record.element_set_number} out of range")
    if not 0 <= record.revolution_number <= 99999:
        raise ValueError(f"revolution number {record.revolution_number} out of range")
    if len(record.intl_designator) > 8:
        raise ValueError(f"international designator {record.intl_designator!r} exceeds 8 columns")
    if len(record.drag_fields) != 30:
        raise ValueError("drag_fields must be exactly 30 characters")
    if round(el.mean_motion, 8) >= 100.0 or round(el.mean_motion, 8) <= 0.0:
        raise ValueError(f"mean motion {el.mean_motion} not representable")
    for name in WRAPPING_ELEMENTS:
        if round(getattr(el, name), 4) >= 360.0:
            raise ValueError(f"{name} rounds to 360.0000, not representable")
    if round(el.inclination, 4) > 180.0 or round(el.inclination, 4) < 0.0:
        raise ValueError(f"inclination {el.inclination} not representable")
    ecc_digits = int(round(el.eccentricity * 1e7))
    if not 0 <= ecc_digits <= 9999999:
        raise ValueError(f"eccentricity {el.eccentricity} not representable in 7 digits")

    yy, day = epoch_encode(record.epoch)
    if day >= 367.0:
        raise ValueError(f"epoch day {day} out of range")

    body1 = (
        f"1 {record.norad_id:05d}{record.classification}"
        f" {record.intl_designator:<8}"
        f" {yy:02d}{day:012.8f}"
        f" {record.drag_fields}"
        f" {record.element_set_number:4d}"
    )
    body2 = (
        f"2 {record.norad_id:05d}"
        f" {el.inclination:8.4f}"
        f" {el.raan:8.4f}"
        f" {ecc_digits:07d}"
        f" {el.arg_perigee:8.4f}"
        f" {el.mean_anomaly:8.4f}"
        f" {el.mean_motion:11.8f}"
        f"{record.revolution_number:5d}"
    )
    if len(body1) != 68 or len(body2) != 68:
        raise ValueError(
            f"internal width error: line bodies are {len(body1)}/{len(body2)} columns"
        )
    return body1 + str(_format_checksum(body1)), body2 + str(_format_checksum(body2))


def corpus_text(corpus: GeneratedCorpus, include_names: bool = False) -> str:
    """The whole corpus as TLE text, objects in catalog-number order."""
    chunks = []
    for norad_id in sorted(corpus.series):
        for rec in corpus.series[norad_id].observations:
            if include_names and rec.name:
                chunks.append(rec.name)
            l1, l2 = format_tle(rec)
            chunks.append(l1)
            chunks.append(l2)
    return "\n".join(chunks) + "\n"


def mask_rows(corpus: GeneratedCorpus):
    """Flat mask rows aligned 1:1 with observations, for the sidecar file."""
    for norad_id in sorted(corpus.series):
        obs = corpus.series[norad_id].observations
        per_el = corpus.masks[norad_id]
        for i, rec in enumerate(obs):
            yield {
                "norad_id": norad_id,
                "index": i,
                "epoch": rec.epoch.isoformat(),
                **{name: int(per_el[name][i]) for name in ELEMENT_NAMES},
            }


# --- schedule helpers -----------------------------------------------------------

def index_range_injection(
    epochs: list[datetime],
    start_index: int,
    end_index: int,
    element: str,
    kind: str,
    magnitude_sigma: float,
    sign: int = 1,
    norad_ids: tuple[int, ...] | None = None,
) -> Injection:
    """Build an epoch-range injection covering observations [start, end)."""
    if not 0 <= start_index < end_index <= len(epochs):
        raise ValueError(f"index range [{start_index}, {end_index}) out of bounds")
    end = epochs[end_index] if end_index < len(epochs) else epochs[-1] + timedelta(days=1)
    return Injection(
        start=epochs[start_index],
        end=end,
        element=element,
        kind=kind,
        magnitude_sigma=magnitude_sigma,
        sign=sign,
        norad_ids=norad_ids,
    )


# --- scenario (de)serialization ---------------------------------------------------

def scenario_to_dict(scenario: ScenarioConfig) -> dict:
    data = asdict(scenario)
    data["start_epoch"] = scenario.start_epoch.isoformat()
    data["baselines"] = {k: asdict(v) for k, v in scenario.baselines.items()}
    data["injections"] = [
        {**asdict(inj), "start": inj.start.isoformat(), "end": inj.end.isoformat(),
         "norad_ids": list(inj.norad_ids) if inj.norad_ids is not None else None}
        for inj in scenario.injections
    ]
    return data


def scenario_from_dict(data: dict) -> ScenarioConfig:
    baselines = {k: ElementBaseline(**v) for k, v in data.get("baselines", {}).items()}
    injections = []
    for item in data.get("injections", []):
        item = dict(item)
        item["start"] = datetime.fromisoformat(item["start"])
        item["end"] = datetime.fromisoformat(item["end"])
        ids = item.get("norad_ids")
        item["norad_ids"] = tuple(ids) if ids is not None else None
        injections.append(Injection(**item))
    kwargs = dict(data)
    kwargs["start_epoch"] = datetime.fromisoformat(data["start_epoch"])
    kwargs["baselines"] = baselines
    kwargs["injections"] = injections
    return ScenarioConfig(**kwargs)


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(scenario: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")
