import math
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsowatch.tle import (LINE_LENGTH, TleParseError, checksum, epoch_decode,
                          epoch_encode, load_tle_file, parse_tle, parse_tle_text)

# A well-known public record, used as a fixed-point oracle for the column map.
ISS_NAME = "ISS (ZARYA)"
ISS_LINE1 = "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927"
ISS_LINE2 = "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537"


class TestChecksum:
    def test_known_lines(self):
        assert checksum(ISS_LINE1) == int(ISS_LINE1[68]) == 7
        assert checksum(ISS_LINE2) == int(ISS_LINE2[68]) == 7

    def test_minus_counts_one_letters_zero(self):
        base = ISS_LINE1
        assert len(base) == LINE_LENGTH
        with_minus = "-" + base[1:]  # leading digit 1 replaced by '-': same contribution
        assert checksum(with_minus) == checksum(base)
        with_letter = "X" + base[1:]  # letters contribute nothing
        assert checksum(with_letter) == (checksum(base) - 1) % 10

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            checksum("1 25544")


class TestEpoch:
    def test_century_split(self):
        assert epoch_decode(8, 264.51782528).year == 2008
        assert epoch_decode(98, 100.0).year == 1998
        assert epoch_decode(57, 1.0) == datetime(1957, 1, 1, tzinfo=timezone.utc)
        assert epoch_decode(56, 1.0) == datetime(2056, 1, 1, tzinfo=timezone.utc)
        assert epoch_decode(0, 1.0) == datetime(2000, 1, 1, tzinfo=timezone.utc)

    def test_day_one_is_january_first(self):
        assert epoch_decode(21, 1.5) == datetime(2021, 1, 1, 12, tzinfo=timezone.utc)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            epoch_decode(100, 10.0)
        with pytest.raises(ValueError):
            epoch_decode(21, 0.5)
        with pytest.raises(ValueError):
            epoch_decode(21, 367.0)

    def test_encode_rejects_naive_and_far_years(self):
        with pytest.raises(ValueError):
            epoch_encode(datetime(2021, 1, 1))
        with pytest.raises(ValueError):
            epoch_encode(datetime(1956, 12, 31, tzinfo=timezone.utc))
        with pytest.raises(ValueError):
            epoch_encode(datetime(2057, 1, 1, tzinfo=timezone.utc))

    @given(
        yy=st.integers(min_value=0, max_value=99),
        day_millionths=st.integers(min_value=100_000_000, max_value=36_599_999_999),
    )
    def test_decode_encode_round_trip(self, yy, day_millionths):
        # Quantized to 1e-8 days, the native resolution of the epoch column.
        day = day_millionths / 1e8
        encoded_yy, encoded_day = epoch_encode(epoch_decode(yy, day))
        assert encoded_yy == yy
        assert math.isclose(encoded_day, day, abs_tol=5e-9)


class TestParse:
    def test_known_record_fields(self):
        rec = parse_tle(ISS_LINE1, ISS_LINE2, name=ISS_NAME)
        assert rec.norad_id == 25544
        assert rec.name == ISS_NAME
        assert rec.classification == "U"
        assert rec.intl_designator == "98067A"
        assert rec.element_set_number == 292
        assert rec.revolution_number == 56353
        assert rec.checksum_valid == (True, True)
        assert rec.epoch == datetime(2008, 1, 1, tzinfo=timezone.utc) + timedelta(
            days=264.51782528 - 1.0
        )
        el = rec.elements
        assert el.inclination == 51.6416
        assert el.raan == 247.4627
        assert el.eccentricity == 0.0006703
        assert el.arg_perigee == 130.5360
        assert el.mean_anomaly == 325.0288
        assert el.mean_motion == 15.72125391
        assert rec.drag_fields == ISS_LINE1[33:63]

    def test_catalog_mismatch(self):
        bad2 = ISS_LINE2[:2] + "25545" + ISS_LINE2[7:]
        with pytest.raises(TleParseError, match="catalog number"):
            parse_tle(ISS_LINE1, bad2)

    def test_wrong_length(self):
        with pytest.raises(TleParseError, match="69 characters"):
            parse_tle(ISS_LINE1[:-1], ISS_LINE2)

    def test_wrong_line_number(self):
        with pytest.raises(TleParseError, match="line number"):
            parse_tle("3" + ISS_LINE1[1:], ISS_LINE2)

    def test_bad_numeric_names_columns(self):
        bad = ISS_LINE2[:26] + "00x6703" + ISS_LINE2[33:]
        with pytest.raises(TleParseError, match=r"cols 27-33 \(eccentricity\)"):
            parse_tle(ISS_LINE1, bad)

    def test_checksum_mismatch_flags_not_raises(self):
        tampered = ISS_LINE1[:68] + "0"
        rec = parse_tle(tampered, ISS_LINE2)
        assert rec.checksum_valid == (False, True)

    def test_element_range_violation(self):
        bad = ISS_LINE2[:8] + "190.0000" + ISS_LINE2[16:]
        with pytest.raises(TleParseError, match="inclination"):
            parse_tle(ISS_LINE1, bad)


class TestParseText:
    def test_three_line_names(self):
        text = "\n".join([ISS_NAME, ISS_LINE1, ISS_LINE2, ""])
        result = parse_tle_text(text)
        assert result.record_count == 1
        assert result.series[25544].observations[0].name == ISS_NAME

    def test_orphan_line2_rejected(self):
        result = parse_tle_text(ISS_LINE2 + "\n" + ISS_LINE1 + "\n" + ISS_LINE2)
        assert result.record_count == 1
        assert len(result.rejected) == 1
        assert "without a preceding line 1" in result.rejected[0][1]

    def test_trailing_line1_rejected(self):
        result = parse_tle_text(ISS_LINE1)
        assert result.record_count == 0
        assert result.rejected == [(1, "line 1 without a matching line 2")]

    def test_bad_record_counted_not_fatal(self):
        bad2 = ISS_LINE2[:2] + "99999" + ISS_LINE2[7:]
        text = "\n".join([ISS_LINE1, bad2, ISS_LINE1, ISS_LINE2])
        result = parse_tle_text(text)
        assert result.record_count == 1
        assert len(result.rejected) == 1

    def test_duplicate_epoch_keeps_higher_elset(self):
        # Same epoch, bumped element set number (and checksum recomputed).
        body = ISS_LINE1[:64] + " 293"
        line1_newer = body + str(checksum(body + "0"))
        result = parse_tle_text("\n".join([ISS_LINE1, ISS_LINE2, line1_newer, ISS_LINE2]))
        series = result.series[25544]
        assert result.record_count == 2
        assert len(series) == 1
        assert series.observations[0].element_set_number == 293

    def test_checksum_warning_counted(self):
        tampered = ISS_LINE1[:68] + "0"
        result = parse_tle_text("\n".join([tampered, ISS_LINE2]))
        assert result.record_count == 1
        assert result.checksum_warnings == 1


class TestLoadFile:
    def test_round_trip_via_disk(self, tmp_path):
        path = tmp_path / "catalog.tle"
        path.write_text("\n".join([ISS_LINE1, ISS_LINE2]) + "\n", encoding="ascii")
        result = load_tle_file(path)
        assert result.object_count == 1
        assert result.record_count == 1

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_tle_file(tmp_path / "absent.tle")

    def test_zero_valid_records_raises(self, tmp_path):
        path = tmp_path / "junk.tle"
        path.write_text("not a tle\nat all\n", encoding="ascii")
        with pytest.raises(ValueError, match="no valid TLE records"):
            load_tle_file(path)
