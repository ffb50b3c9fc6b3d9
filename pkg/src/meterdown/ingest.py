"""Parsing of reading and meter CSV files into validated in-memory records.

Two interchange formats, both UTF-8 with LF or CRLF line endings:

readings: ``meter_id,timestamp,value,process_ok,congruent``
    timestamp is an ISO-8601 date (day resolution), value a non-negative
    decimal cumulative counter in cubic meters, flags are 0/1.

meters: ``meter_id,producer,meter_type,year,contract,defective``
    one row per meter, meter_id unique, year in [1900, current year].
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

from .errors import CsvFormatError

READINGS_HEADER = ("meter_id", "timestamp", "value", "process_ok", "congruent")
METERS_HEADER = ("meter_id", "producer", "meter_type", "year", "contract", "defective")

YEAR_MIN = 1900

Source = Union[str, bytes, IO[str], IO[bytes]]


@dataclass(frozen=True)
class RawReading:
    """One meter reading as it arrives from the utility export."""

    meter_id: str
    timestamp: dt.date
    value: float
    process_ok: bool
    congruent: bool


@dataclass(frozen=True)
class MeterRecord:
    """Per-meter metadata: four categorical attributes plus the ground-truth defect flag."""

    meter_id: str
    producer: str
    meter_type: str
    year_of_construction: int
    contract_type: str
    defective: bool


def _as_lines(source: Source) -> list[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8-sig")
    if isinstance(source, str):
        return source.splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return data.splitlines()


def _parse_flag(raw: str, line: int, column: str) -> bool:
    token = raw.strip().lower()
    if token in ("1", "true"):
        return True
    if token in ("0", "false"):
        return False
    raise CsvFormatError(
        f"line {line}: {column} must be 0/1 or true/false, got {raw!r}",
        line=line, column=column,
    )


def _parse_date(raw: str, line: int, column: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError:
        raise CsvFormatError(
            f"line {line}: {column} is not an ISO-8601 date: {raw!r}",
            line=line, column=column,
        ) from None


def _check_header(row: list[str], expected: tuple[str, ...], what: str) -> None:
    if tuple(cell.strip() for cell in row) != expected:
        raise CsvFormatError(
            f"{what} header must be {','.join(expected)}, got {','.join(row)!r}",
            line=1, column="header",
        )


def parse_readings(source: Source) -> list[RawReading]:
    """Parse a readings CSV into RawReading records, preserving file order.

    Raises CsvFormatError (with line and column) on a malformed row, a
    negative value, or an unparsable date.
    """
    lines = _as_lines(source)
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("readings file is empty (missing header)", line=1, column="header") from None
    _check_header(header, READINGS_HEADER, "readings")

    out: list[RawReading] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(READINGS_HEADER):
            raise CsvFormatError(
                f"line {line_no}: expected {len(READINGS_HEADER)} fields, got {len(row)}",
                line=line_no, column="row",
            )
        meter_id = row[0].strip()
        if not meter_id:
            raise CsvFormatError(f"line {line_no}: empty meter_id", line=line_no, column="meter_id")
        timestamp = _parse_date(row[1], line_no, "timestamp")
        try:
            value = float(row[2])
        except ValueError:
            raise CsvFormatError(
                f"line {line_no}: value is not a decimal: {row[2]!r}",
                line=line_no, column="value",
            ) from None
        if not value >= 0:
            raise CsvFormatError(
                f"line {line_no}: value must be >= 0, got {row[2]}",
                line=line_no, column="value",
            )
        out.append(RawReading(
            meter_id=meter_id,
            timestamp=timestamp,
            value=value,
            process_ok=_parse_flag(row[3], line_no, "process_ok"),
            congruent=_parse_flag(row[4], line_no, "congruent"),
        ))
    return out


def parse_meters(source: Source) -> dict[str, MeterRecord]:
    """Parse a meters CSV into a meter_id -> MeterRecord map.

    Duplicate meter ids and construction years outside [1900, current year]
    are rejected.
    """
    lines = _as_lines(source)
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("meters file is empty (missing header)", line=1, column="header") from None
    _check_header(header, METERS_HEADER, "meters")

    year_max = dt.date.today().year
    out: dict[str, MeterRecord] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(METERS_HEADER):
            raise CsvFormatError(
                f"line {line_no}: expected {len(METERS_HEADER)} fields, got {len(row)}",
                line=line_no, column="row",
            )
        meter_id = row[0].strip()
        if not meter_id:
            raise CsvFormatError(f"line {line_no}: empty meter_id", line=line_no, column="meter_id")
        if meter_id in out:
            raise CsvFormatError(
                f"line {line_no}: duplicate meter_id {meter_id!r}",
                line=line_no, column="meter_id",
            )
        try:
            year = int(row[3])
        except ValueError:
            raise CsvFormatError(
                f"line {line_no}: year is not an integer: {row[3]!r}",
                line=line_no, column="year",
            ) from None
        if not YEAR_MIN <= year <= year_max:
            raise CsvFormatError(
                f"line {line_no}: year must be in [{YEAR_MIN}, {year_max}], got {year}",
                line=line_no, column="year",
            )
        out[meter_id] = MeterRecord(
            meter_id=meter_id,
            producer=row[1].strip(),
            meter_type=row[2].strip(),
            year_of_construction=year,
            contract_type=row[4].strip(),
            defective=_parse_flag(row[5], line_no, "defective"),
        )
    return out


def _flag(b: bool) -> str:
    return "1" if b else "0"


def readings_to_csv(readings: Iterable[RawReading]) -> str:
    """Serialize readings back to the interchange CSV (LF endings, lossless floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(READINGS_HEADER)
    for r in readings:
        writer.writerow([r.meter_id, r.timestamp.isoformat(), repr(r.value),
                         _flag(r.process_ok), _flag(r.congruent)])
    return buf.getvalue()


def meters_to_csv(meters: Iterable[MeterRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METERS_HEADER)
    for m in meters:
        writer.writerow([m.meter_id, m.producer, m.meter_type,
                         str(m.year_of_construction), m.contract_type, _flag(m.defective)])
    return buf.getvalue()


def read_readings_file(path: str | Path) -> list[RawReading]:
    return parse_readings(Path(path).read_bytes())


def read_meters_file(path: str | Path) -> dict[str, MeterRecord]:
    return parse_meters(Path(path).read_bytes())
