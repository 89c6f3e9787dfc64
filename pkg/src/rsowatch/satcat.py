"""Catalog snapshots, study-population selection and mission-class assignment."""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from datetime import date, datetime

from .elements import EphemerisSeries
from .windows import PeriodWindow

log = logging.getLogger(__name__)


class ObjectType(str, enum.Enum):
    PAYLOAD = "PAYLOAD"
    SATELLITE = "SATELLITE"
    DEBRIS = "DEBRIS"
    ROCKET_BODY = "ROCKET_BODY"
    UNKNOWN = "UNKNOWN"


class MissionClass(str, enum.Enum):
    """Closed label set for mission rollups; anything unmapped is UNIDENTIFIED."""

    ASTRONOMY = "astronomy"
    COMMUNICATIONS = "communications"
    COMMUNICATIONS_OTHER = "communications_other"
    COMMUNICATIONS_SURVEILLANCE_AND_OTHER_MILITARY = "communications_surveillance_and_other_military"
    COMMUNICATIONS_TECHNOLOGY_APPLICATIONS = "communications_technology_applications"
    EARTH_SCIENCE = "earth_science"
    EARTH_SCIENCE_COMMUNICATIONS = "earth_science_communications"
    EARTH_SCIENCE_NAVIGATION_GLOBAL_POSITIONING = "earth_science_navigation_global_positioning"
    EARTH_SCIENCE_SPACE_PHYSICS = "earth_science_space_physics"
    EARTH_SCIENCE_SURVEILLANCE_AND_OTHER_MILITARY = "earth_science_surveillance_and_other_military"
    ENGINEERING = "engineering"
    NAVIGATION_GLOBAL_POSITIONING = "navigation_global_positioning"
    NAVIGATION_GLOBAL_POSITIONING_SURVEILLANCE_AND_OTHER_MILITARY = (
        "navigation_global_positioning_surveillance_and_other_military"
    )
    OTHER = "other"
    PLANETARY_SCIENCE = "planetary_science"
    SOLAR_PHYSICS = "solar_physics"
    SPACE_PHYSICS = "space_physics"
    SURVEILLANCE_AND_OTHER_MILITARY = "surveillance_and_other_military"
    TECHNOLOGY_APPLICATIONS = "technology_applications"
    UNCATEGORIZED_COSMOS = "uncategorized_cosmos"
    UNIDENTIFIED = "unidentified"


_MISSION_VALUES = {m.value for m in MissionClass}

SATCAT_COLUMNS = ("norad_id", "country", "object_type", "name", "launch_date", "decay_date")


@dataclass(frozen=True)
class SatCatEntry:
    norad_id: int
    country: str
    object_type: ObjectType
    name: str = ""
    launch_date: date | None = None
    decay_date: date | None = None


@dataclass(frozen=True)
class SelectionCriteria:
    """Study-population filter.

    ``min_obs_window`` restricts the observation-count requirement to a
    window (typically the training window); None counts the whole series.
    """

    owner_codes: frozenset[str] = frozenset({"CIS"})
    excluded_object_types: frozenset[ObjectType] = frozenset({ObjectType.DEBRIS})
    activity_window: PeriodWindow | None = None
    min_training_observations: int = 100
    min_obs_window: PeriodWindow | None = None

    def __post_init__(self) -> None:
        if self.min_training_observations < 0:
            raise ValueError("min_training_observations must be non-negative")


def _parse_date(text: str, row_no: int, column: str) -> date | None:
    text = text.strip()
    if not text:
        return None
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise ValueError(f"satcat row {row_no}: bad {column} {text!r}") from None


def load_satcat(path) -> dict[int, SatCatEntry]:
    """Load a delimited catalog snapshot keyed by catalog number.

    The header must carry exactly the documented column names; unknown object
    types or malformed rows raise with the row number.
    """
    entries: dict[int, SatCatEntry] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SATCAT_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"satcat {path}: missing column(s) {missing}")
        for row_no, row in enumerate(reader, start=2):
            try:
                norad_id = int(row["norad_id"])
            except (TypeError, ValueError):
                raise ValueError(f"satcat row {row_no}: bad norad_id {row['norad_id']!r}") from None
            type_text = (row["object_type"] or "").strip().upper()
            try:
                object_type = ObjectType(type_text)
            except ValueError:
                raise ValueError(
                    f"satcat row {row_no}: unknown object_type {row['object_type']!r}"
                ) from None
            entries[norad_id] = SatCatEntry(
                norad_id=norad_id,
                country=(row["country"] or "").strip().upper(),
                object_type=object_type,
                name=(row["name"] or "").strip(),
                launch_date=_parse_date(row["launch_date"] or "", row_no, "launch_date"),
                decay_date=_parse_date(row["decay_date"] or "", row_no, "decay_date"),
            )
    return entries


def load_mission_map(path) -> dict[int, MissionClass]:
    """Load a norad_id -> mission label file; labels outside the closed set fail."""
    mapping: dict[int, MissionClass] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"norad_id", "mission_class"}
        if not required.issubset(set(reader.fieldnames or [])):
            raise ValueError(f"mission map {path}: needs columns {sorted(required)}")
        for row_no, row in enumerate(reader, start=2):
            try:
                norad_id = int(row["norad_id"])
            except (TypeError, ValueError):
                raise ValueError(
                    f"mission map row {row_no}: bad norad_id {row['norad_id']!r}"
                ) from None
            label = (row["mission_class"] or "").strip()
            if label not in _MISSION_VALUES:
                raise ValueError(
                    f"mission map row {row_no}: {label!r} is not a recognised mission class"
                )
            mapping[norad_id] = MissionClass(label)
    return mapping


def assign_mission_class(
    norad_id: int,
    primary: dict[int, MissionClass],
    secondary: dict[int, MissionClass] | None = None,
) -> MissionClass:
    """Primary mapping wins; the secondary fills gaps; everything else is UNIDENTIFIED."""
    if norad_id in primary:
        return primary[norad_id]
    if secondary and norad_id in secondary:
        return secondary[norad_id]
    return MissionClass.UNIDENTIFIED


def _count_in_window(series: EphemerisSeries, window: PeriodWindow | None) -> int:
    if window is None:
        return len(series)
    return sum(1 for t in series.epochs() if window.contains(t))


def select_rsos(
    satcat: dict[int, SatCatEntry],
    series_map: dict[int, EphemerisSeries],
    criteria: SelectionCriteria,
) -> list[int]:
    """Catalog numbers passing every selection predicate, ascending.

    Predicates: catalogued under an accepted owner, not an excluded object
    type, at least one observation inside the activity window, and enough
    observations (within ``min_obs_window`` when set) to train on. Objects
    with ephemerides but no catalog entry are excluded because ownership
    cannot be verified.
    """
    selected = []
    for norad_id in sorted(series_map):
        entry = satcat.get(norad_id)
        if entry is None:
            continue
        if criteria.owner_codes and entry.country not in criteria.owner_codes:
            continue
        if entry.object_type in criteria.excluded_object_types:
            continue
        series = series_map[norad_id]
        if criteria.activity_window is not None:
            if _count_in_window(series, criteria.activity_window) < 1:
                continue
        if _count_in_window(series, criteria.min_obs_window) < criteria.min_training_observations:
            continue
        selected.append(norad_id)
    if not selected:
        log.warning("selection matched no objects")
    return selected
