"""Validity rules and gap-based segmentation of per-meter reading histories.

A reading is valid when its process flag and congruence flag both hold; a
valid history is then split wherever two consecutive readings are more than
``gap_limit_days`` apart (default 214 days, a seven-month allowance of
7 x 30.5 rounded). Every maximal gap-free run is kept as its own series.
"""

from __future__ import annotations

import datetime as dt
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConfigError, DataError
from .ingest import RawReading

DEFAULT_GAP_LIMIT_DAYS = 214


@dataclass
class ValidSeries:
    """A gap-free run of valid readings for one meter, strictly time-ordered."""

    meter_id: str
    points: list[tuple[dt.date, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    @property
    def timestamps(self) -> list[dt.date]:
        return [t for t, _ in self.points]


def _single_meter_id(readings: Sequence[RawReading]) -> str:
    ids = {r.meter_id for r in readings}
    if len(ids) > 1:
        raise DataError(f"readings mix meter ids: {sorted(ids)}", meter_ids=sorted(ids))
    return next(iter(ids))


def filter_valid(readings: Sequence[RawReading]) -> list[RawReading]:
    """Keep exactly the readings whose process and congruence flags both hold.

    Order-preserving and idempotent; all readings must share one meter_id.
    """
    if not readings:
        return []
    _single_meter_id(readings)
    return [r for r in readings if r.process_ok and r.congruent]


def segment(readings: Sequence[RawReading],
            gap_limit_days: int = DEFAULT_GAP_LIMIT_DAYS) -> list[ValidSeries]:
    """Partition a time-sorted single-meter history into maximal gap-free series.

    A cut happens wherever consecutive readings are more than gap_limit_days
    apart. Duplicate-timestamp readings collapse to the last occurrence, so
    every series carries strictly increasing timestamps.
    """
    if gap_limit_days <= 0:
        raise ConfigError(f"gap_limit_days must be > 0, got {gap_limit_days}")
    if not readings:
        return []
    meter_id = _single_meter_id(readings)
    for a, b in zip(readings, readings[1:]):
        if b.timestamp < a.timestamp:
            raise DataError(
                f"readings for {meter_id} are not time-sorted "
                f"({a.timestamp} followed by {b.timestamp})",
                meter_id=meter_id,
            )

    # same-day re-reads supersede earlier ones
    deduped: list[RawReading] = []
    for r in readings:
        if deduped and deduped[-1].timestamp == r.timestamp:
            deduped[-1] = r
        else:
            deduped.append(r)

    series: list[ValidSeries] = [ValidSeries(meter_id, [(deduped[0].timestamp, deduped[0].value)])]
    for prev, cur in zip(deduped, deduped[1:]):
        if (cur.timestamp - prev.timestamp).days > gap_limit_days:
            series.append(ValidSeries(meter_id, []))
        series[-1].points.append((cur.timestamp, cur.value))
    return series


def validate_fleet(readings: Iterable[RawReading],
                   gap_limit_days: int = DEFAULT_GAP_LIMIT_DAYS,
                   ) -> tuple[dict[str, list[ValidSeries]], dict]:
    """Run the full validity pass over a multi-meter reading stream.

    Groups by meter, time-sorts each history (stable, so same-day re-reads
    keep file order and the last one wins), applies the flag rules, and
    segments at the gap limit. Returns the per-meter series plus a summary
    suitable for JSON output: meters in, readings kept/dropped per rule,
    gap cuts, and a segment-length histogram.
    """
    by_meter: dict[str, list[RawReading]] = {}
    total = 0
    for r in readings:
        by_meter.setdefault(r.meter_id, []).append(r)
        total += 1

    dropped_process = 0
    dropped_incongruent = 0
    gap_cuts = 0
    histogram: Counter[int] = Counter()
    series_by_meter: dict[str, list[ValidSeries]] = {}
    kept = 0
    for meter_id, rows in by_meter.items():
        rows = sorted(rows, key=lambda r: r.timestamp)
        dropped_process += sum(1 for r in rows if not r.process_ok)
        dropped_incongruent += sum(1 for r in rows if r.process_ok and not r.congruent)
        valid = filter_valid(rows)
        kept += len(valid)
        segs = segment(valid, gap_limit_days)
        gap_cuts += max(0, len(segs) - 1)
        for s in segs:
            histogram[len(s)] += 1
        series_by_meter[meter_id] = segs

    summary = {
        "meters": len(by_meter),
        "readings_total": total,
        "readings_kept": kept,
        "dropped_process_failed": dropped_process,
        "dropped_incongruent": dropped_incongruent,
        "gap_limit_days": gap_limit_days,
        "gap_cuts": gap_cuts,
        "segments": sum(histogram.values()),
        "segment_length_histogram": {str(k): histogram[k] for k in sorted(histogram)},
    }
    return series_by_meter, summary
