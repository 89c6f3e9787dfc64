"""Half-open time windows used for training, labeling and reporting."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone


def utc(year: int, month: int, day: int) -> datetime:
    return datetime(year, month, day, tzinfo=timezone.utc)


@dataclass(frozen=True)
class PeriodWindow:
    """A named [start, end) interval in UTC."""

    name: str
    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise ValueError(f"window {self.name!r} bounds must be timezone-aware")
        if not self.start < self.end:
            raise ValueError(f"window {self.name!r} start must precede end")

    def contains(self, t: datetime) -> bool:
        return self.start <= t < self.end

    def overlaps(self, other: "PeriodWindow") -> bool:
        return self.start < other.end and other.start < self.end

    def days(self) -> float:
        return (self.end - self.start).total_seconds() / 86400.0


def default_windows() -> dict[str, PeriodWindow]:
    """The tool's stock analysis windows.

    End bounds are exclusive, so "to August 23" becomes an end instant of
    August 24 00:00 UTC. ``baseline`` and ``leadup`` are contiguous and
    disjoint; ``post`` starts where ``leadup`` ends.
    """
    return {
        "train": PeriodWindow("train", utc(2016, 8, 24), utc(2021, 8, 24)),
        "train4y": PeriodWindow("train4y", utc(2017, 8, 24), utc(2021, 8, 24)),
        "baseline": PeriodWindow("baseline", utc(2021, 2, 24), utc(2021, 8, 24)),
        "leadup": PeriodWindow("leadup", utc(2021, 8, 24), utc(2022, 2, 24)),
        "post": PeriodWindow("post", utc(2022, 2, 24), utc(2024, 2, 24)),
    }


#: Window pairs that must never overlap in a run configuration.
REQUIRED_DISJOINT: tuple[tuple[str, str], ...] = (("baseline", "leadup"),)
