import datetime as dt

import numpy as np
import pytest

from meterdown.errors import CsvFormatError
from meterdown.ingest import (MeterRecord, RawReading, meters_to_csv,
                              parse_meters, parse_readings, readings_to_csv)

READINGS_HEADER = "meter_id,timestamp,value,process_ok,congruent\n"
METERS_HEADER = "meter_id,producer,meter_type,year,contract,defective\n"


def test_parse_single_reading():
    rows = parse_readings(READINGS_HEADER + "m1,2018-01-10,100.5,1,1\n")
    assert rows == [RawReading("m1", dt.date(2018, 1, 10), 100.5, True, True)]


def test_header_only_gives_empty_sequence():
    assert parse_readings(READINGS_HEADER) == []


def test_negative_value_rejected_with_position():
    with pytest.raises(CsvFormatError) as err:
        parse_readings(READINGS_HEADER + "m1,2018-01-10,-3,1,1\n")
    assert err.value.details["line"] == 2
    assert err.value.details["column"] == "value"


def test_bad_date_rejected():
    with pytest.raises(CsvFormatError) as err:
        parse_readings(READINGS_HEADER + "m1,2018-13-40,3,1,1\n")
    assert err.value.details["column"] == "timestamp"


def test_bad_flag_and_short_row_rejected():
    with pytest.raises(CsvFormatError):
        parse_readings(READINGS_HEADER + "m1,2018-01-10,3,yes?,1\n")
    with pytest.raises(CsvFormatError) as err:
        parse_readings(READINGS_HEADER + "m1,2018-01-10,3,1\n")
    assert err.value.details["line"] == 2


def test_wrong_header_rejected():
    with pytest.raises(CsvFormatError):
        parse_readings("meter,when,how_much\nm1,2018-01-10,3\n")


def test_crlf_and_bytes_accepted():
    text = READINGS_HEADER.replace("\n", "\r\n") + "m1,2018-01-10,100.5,1,0\r\n"
    rows = parse_readings(text.encode("utf-8"))
    assert len(rows) == 1 and rows[0].congruent is False


def test_parse_meters_basic():
    meters = parse_meters(METERS_HEADER + "m1,ACME,dry-dial,2009,residential,1\n")
    assert meters["m1"] == MeterRecord("m1", "ACME", "dry-dial", 2009, "residential", True)


def test_duplicate_meter_id_rejected():
    text = METERS_HEADER + "m1,ACME,dry-dial,2009,residential,1\n" \
                           "m1,ACME,dry-dial,2010,residential,0\n"
    with pytest.raises(CsvFormatError) as err:
        parse_meters(text)
    assert "m1" in str(err.value)


def test_year_out_of_range_rejected():
    with pytest.raises(CsvFormatError) as err:
        parse_meters(METERS_HEADER + "m2,ACME,dry-dial,1850,residential,0\n")
    assert err.value.details["column"] == "year"
    future = dt.date.today().year + 1
    with pytest.raises(CsvFormatError):
        parse_meters(METERS_HEADER + f"m2,ACME,dry-dial,{future},residential,0\n")


def _random_readings(rng, n):
    out = []
    day = dt.date(2017, 1, 1)
    value = 0.0
    for i in range(n):
        day += dt.timedelta(days=int(rng.integers(1, 40)))
        value += round(float(rng.uniform(0, 50)), 3)
        out.append(RawReading(f"m{rng.integers(0, 5)}", day, round(value, 3),
                              bool(rng.integers(0, 2)), bool(rng.integers(0, 2))))
    return out


def test_readings_round_trip_and_order():
    rng = np.random.default_rng(42)
    for _ in range(20):
        rows = _random_readings(rng, int(rng.integers(0, 60)))
        text = readings_to_csv(rows)
        parsed = parse_readings(text)
        assert parsed == rows
        assert readings_to_csv(parsed) == text


def test_meters_round_trip():
    rng = np.random.default_rng(7)
    meters = [
        MeterRecord(f"m{i}", f"P{rng.integers(0, 3)}", f"T{rng.integers(0, 3)}",
                    int(rng.integers(1950, 2020)), f"C{rng.integers(0, 2)}",
                    bool(rng.integers(0, 2)))
        for i in range(30)
    ]
    parsed = parse_meters(meters_to_csv(meters))
    assert list(parsed.values()) == meters
