"""Two-line element set parsing and file ingest.

Column positions follow the fixed 69-character format. All slices below are
0-based Python indices; comments give the conventional 1-based columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .elements import EphemerisSeries, OrbitalElements, TleRecord

log = logging.getLogger(__name__)

LINE_LENGTH = 69


class TleParseError(ValueError):
    """Raised when a TLE line pair cannot be interpreted.

    The message names the offending line and column span so malformed feeds
    can be triaged without a hex dump.
    """


def checksum(line: str) -> int:
    """Modulo-10 checksum over the first 68 characters.

    Digits contribute their value, each ``-`` contributes 1, everything else
    contributes 0.
    """
    if len(line) < LINE_LENGTH - 1:
        raise ValueError(f"checksum needs at least 68 characters, got {len(line)}")
    total = 0
    for ch in line[: LINE_LENGTH - 1]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def epoch_decode(yy: int, day_of_year: float) -> datetime:
    """Decode the two-digit year + fractional day-of-year epoch to UTC.

    Years 57-99 map to 1957-1999 and 00-56 map to 2000-2056. Day 1.0 is
    January 1 00:00:00 UTC.
    """
    if not 0 <= yy <= 99:
        raise ValueError(f"epoch year field must lie in [0, 99], got {yy}")
    if not 1.0 <= day_of_year < 367.0:
        raise ValueError(f"epoch day must lie in [1, 367), got {day_of_year}")
    year = 1900 + yy if yy >= 57 else 2000 + yy
    return datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(days=day_of_year - 1.0)


def epoch_encode(epoch: datetime) -> tuple[int, float]:
    """Inverse of :func:`epoch_decode`: (two-digit year, day-of-year to 8 decimals)."""
    if epoch.tzinfo is None:
        raise ValueError("epoch must be timezone-aware")
    t = epoch.astimezone(timezone.utc)
    if not 1957 <= t.year <= 2056:
        raise ValueError(f"epoch year {t.year} not representable in a two-digit field")
    start = datetime(t.year, 1, 1, tzinfo=timezone.utc)
    day = (t - start).total_seconds() / 86400.0 + 1.0
    return t.year % 100, round(day, 8)


def _numeric(text: str, caster, line_no: int, cols: str, what: str):
    try:
        return caster(text)
    except ValueError:
        raise TleParseError(
            f"line {line_no} cols {cols} ({what}): cannot parse {text!r}"
        ) from None


def _check_line(line: str, expected_no: str) -> None:
    if len(line) != LINE_LENGTH:
        raise TleParseError(
            f"line {expected_no} must be exactly {LINE_LENGTH} characters, got {len(line)}"
        )
    if line[0] != expected_no:
        raise TleParseError(f"line {expected_no} cols 1-1 (line number): got {line[0]!r}")


def _checksum_ok(line: str) -> bool:
    tail = line[LINE_LENGTH - 1]
    return tail.isdigit() and checksum(line) == int(tail)


def parse_tle(line1: str, line2: str, name: str = "") -> TleRecord:
    """Parse one record from its two 69-character lines.

    Checksum mismatches set the corresponding ``checksum_valid`` flag instead
    of rejecting the record. Field-level violations (bad numbers, element
    ranges, catalog number mismatch between lines) raise
    :class:`TleParseError`.
    """
    _check_line(line1, "1")
    _check_line(line2, "2")

    norad1 = _numeric(line1[2:7], lambda s: int(s), 1, "3-7", "catalog number")
    norad2 = _numeric(line2[2:7], lambda s: int(s), 2, "3-7", "catalog number")
    if norad1 != norad2:
        raise TleParseError(
            f"line 2 cols 3-7 (catalog number): {norad2} does not match line 1 ({norad1})"
        )
    if norad1 <= 0:
        raise TleParseError(f"line 1 cols 3-7 (catalog number): must be positive, got {norad1}")

    yy = _numeric(line1[18:20], lambda s: int(s), 1, "19-20", "epoch year")
    day = _numeric(line1[20:32], float, 1, "21-32", "epoch day")
    try:
        epoch = epoch_decode(yy, day)
    except ValueError as exc:
        raise TleParseError(f"line 1 cols 19-32 (epoch): {exc}") from None

    elset_text = line1[64:68].strip() or "0"
    element_set_number = _numeric(elset_text, int, 1, "65-68", "element set number")

    inclination = _numeric(line2[8:16], float, 2, "9-16", "inclination")
    raan = _numeric(line2[17:25], float, 2, "18-25", "raan")
    ecc_field = line2[26:33]
    eccentricity = _numeric("0." + ecc_field, float, 2, "27-33", "eccentricity")
    arg_perigee = _numeric(line2[34:42], float, 2, "35-42", "argument of perigee")
    mean_anomaly = _numeric(line2[43:51], float, 2, "44-51", "mean anomaly")
    mean_motion = _numeric(line2[52:63], float, 2, "53-63", "mean motion")
    rev_text = line2[63:68].strip() or "0"
    revolution_number = _numeric(rev_text, int, 2, "64-68", "revolution number")

    try:
        elements = OrbitalElements(
            mean_motion=mean_motion,
            eccentricity=eccentricity,
            inclination=inclination,
            raan=raan,
            arg_perigee=arg_perigee,
            mean_anomaly=mean_anomaly,
        )
    except ValueError as exc:
        raise TleParseError(f"line 2 (elements): {exc}") from None

    return TleRecord(
        norad_id=norad1,
        epoch=epoch,
        elements=elements,
        classification=line1[7],
        intl_designator=line1[9:17].strip(),
        element_set_number=element_set_number,
        checksum_valid=(_checksum_ok(line1), _checksum_ok(line2)),
        revolution_number=revolution_number,
        drag_fields=line1[33:63],
        name=name,
    )


@dataclass
class IngestResult:
    """Outcome of parsing a TLE stream: series per object plus a rejection report."""

    series: dict[int, EphemerisSeries] = field(default_factory=dict)
    record_count: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    checksum_warnings: int = 0

    @property
    def object_count(self) -> int:
        return len(self.series)


def parse_tle_text(text: str) -> IngestResult:
    """Parse a 2-line (optionally 3-line, name first) TLE stream.

    Unparseable entries are collected in ``rejected`` with their line number
    and reason; they are counted, never silently dropped. Checksum mismatches
    only increment ``checksum_warnings``.
    """
    lines = text.splitlines()
    records: dict[int, list[TleRecord]] = {}
    result = IngestResult()
    pending_name = ""
    i = 0
    while i < len(lines):
        line = lines[i].rstrip("\r")
        if not line.strip():
            i += 1
            continue
        if line.startswith("1 "):
            line1 = line
            if i + 1 >= len(lines):
                result.rejected.append((i + 1, "line 1 without a matching line 2"))
                break
            line2 = lines[i + 1].rstrip("\r")
            try:
                rec = parse_tle(line1, line2, name=pending_name)
            except TleParseError as exc:
                result.rejected.append((i + 1, str(exc)))
                i += 2
                pending_name = ""
                continue
            records.setdefault(rec.norad_id, []).append(rec)
            result.record_count += 1
            if not all(rec.checksum_valid):
                result.checksum_warnings += 1
            pending_name = ""
            i += 2
        elif line.startswith("2 "):
            result.rejected.append((i + 1, "line 2 without a preceding line 1"))
            i += 1
        else:
            # Anything else is treated as the object name of the next record.
            pending_name = line.strip()
            i += 1

    for norad_id, recs in records.items():
        result.series[norad_id] = EphemerisSeries.from_records(norad_id, recs)

    if result.rejected:
        log.warning("rejected %d TLE entr%s during ingest",
                    len(result.rejected), "y" if len(result.rejected) == 1 else "ies")
    if result.checksum_warnings:
        log.warning("%d record(s) carried checksum mismatches", result.checksum_warnings)
    return result


def load_tle_file(path) -> IngestResult:
    """Parse a TLE file from disk.

    Raises ``OSError`` when the file cannot be read and ``ValueError`` when it
    yields zero valid records.
    """
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    result = parse_tle_text(text)
    if result.record_count == 0:
        raise ValueError(f"no valid TLE records in {path}")
    return result
