"""Typed records for TLE observations and per-object ephemeris series."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

#: Canonical feature order for model inputs, labels and reports.
ELEMENT_NAMES: tuple[str, ...] = (
    "mean_motion",
    "eccentricity",
    "inclination",
    "raan",
    "arg_perigee",
    "mean_anomaly",
)

#: Angles that wrap at 360 degrees. Inclination lives in [0, 180] and does not wrap.
WRAPPING_ELEMENTS: tuple[str, ...] = ("raan", "arg_perigee", "mean_anomaly")

#: Column layout of line 1 drag/derivative fields (columns 34-63), kept verbatim.
DEFAULT_DRAG_FIELDS = " .00000000  00000-0  00000-0 0"


@dataclass(frozen=True)
class OrbitalElements:
    """The six classical elements carried by one TLE observation.

    Units follow the TLE convention: mean motion in revolutions/day and
    all angles in degrees.
    """

    mean_motion: float
    eccentricity: float
    inclination: float
    raan: float
    arg_perigee: float
    mean_anomaly: float

    def __post_init__(self) -> None:
        if not self.mean_motion > 0.0:
            raise ValueError(f"mean_motion must be positive, got {self.mean_motion!r}")
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(f"eccentricity must lie in [0, 1), got {self.eccentricity!r}")
        if not 0.0 <= self.inclination <= 180.0:
            raise ValueError(f"inclination must lie in [0, 180], got {self.inclination!r}")
        for name in WRAPPING_ELEMENTS:
            value = getattr(self, name)
            if not 0.0 <= value < 360.0:
                raise ValueError(f"{name} must lie in [0, 360), got {value!r}")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in ELEMENT_NAMES], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in ELEMENT_NAMES}

    @classmethod
    def from_vector(cls, vector) -> "OrbitalElements":
        values = [float(v) for v in vector]
        if len(values) != len(ELEMENT_NAMES):
            raise ValueError(f"expected {len(ELEMENT_NAMES)} values, got {len(values)}")
        return cls(*values)


@dataclass(frozen=True)
class TleRecord:
    """One parsed TLE observation.

    ``checksum_valid`` carries one flag per line; a mismatch downgrades to a
    warning during ingest rather than rejecting the record. ``drag_fields``
    keeps line-1 columns 34-63 verbatim so a record can be re-emitted without
    interpreting the drag terms.
    """

    norad_id: int
    epoch: datetime
    elements: OrbitalElements
    classification: str = "U"
    intl_designator: str = ""
    element_set_number: int = 0
    checksum_valid: tuple[bool, bool] = (True, True)
    revolution_number: int = 0
    drag_fields: str = DEFAULT_DRAG_FIELDS
    name: str = ""

    def __post_init__(self) -> None:
        if self.norad_id <= 0:
            raise ValueError(f"norad_id must be positive, got {self.norad_id!r}")
        if self.epoch.tzinfo is None:
            raise ValueError("epoch must be timezone-aware (UTC)")
        if len(self.classification) != 1:
            raise ValueError(f"classification must be one character, got {self.classification!r}")


@dataclass
class EphemerisSeries:
    """Observations of a single object, sorted by epoch with duplicates resolved."""

    norad_id: int
    observations: list[TleRecord] = field(default_factory=list)
    name: str = ""

    @classmethod
    def from_records(cls, norad_id: int, records: list[TleRecord]) -> "EphemerisSeries":
        """Build a series: strictly increasing epochs, duplicate epochs deduplicated.

        Exactly equal epochs keep the record with the highest element set
        number (later file position wins ties).
        """
        by_epoch: dict[datetime, TleRecord] = {}
        for rec in records:
            if rec.norad_id != norad_id:
                raise ValueError(f"record for {rec.norad_id} in series {norad_id}")
            kept = by_epoch.get(rec.epoch)
            if kept is None or rec.element_set_number >= kept.element_set_number:
                by_epoch[rec.epoch] = rec
        ordered = [by_epoch[t] for t in sorted(by_epoch)]
        name = next((r.name for r in ordered if r.name), "")
        return cls(norad_id=norad_id, observations=ordered, name=name)

    def __len__(self) -> int:
        return len(self.observations)

    def epochs(self) -> list[datetime]:
        return [rec.epoch for rec in self.observations]

    def matrix(self) -> np.ndarray:
        """N x 6 array of element values in ``ELEMENT_NAMES`` order."""
        if not self.observations:
            return np.empty((0, len(ELEMENT_NAMES)), dtype=np.float64)
        return np.stack([rec.elements.as_vector() for rec in self.observations])

    def in_window(self, window) -> "EphemerisSeries":
        """Sub-series restricted to a half-open [start, end) time window."""
        subset = [rec for rec in self.observations if window.contains(rec.epoch)]
        return EphemerisSeries(norad_id=self.norad_id, observations=subset, name=self.name)
