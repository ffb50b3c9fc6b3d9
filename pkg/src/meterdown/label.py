"""Plateau detection and construction of labeled training windows.

A plateau is a run of two or more consecutive readings with exactly the same
cumulative value, the failure signature of a dying meter. A positive window
for scheme pP+k takes the k readings immediately before a series' first
plateau followed by that plateau's first p readings. A negative window is the
most recent k+p readings of a healthy meter, one per meter.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigError, DataError
from .ingest import MeterRecord
from .validate import ValidSeries

Window = list[tuple[dt.date, float]]


@dataclass(frozen=True)
class PlateauSpan:
    """First maximal run of >= 2 exactly-equal consecutive values in a series."""

    start: int
    length: int


@dataclass(frozen=True)
class Scheme:
    """Window scheme pP+k: p plateau readings (1 or 2) after k preceding ones."""

    p: int
    k: int

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ConfigError(f"scheme p must be 1 or 2, got {self.p}")
        if self.k < 1:
            raise ConfigError(f"scheme k must be >= 1, got {self.k}")

    @property
    def window_len(self) -> int:
        return self.p + self.k

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        m = re.fullmatch(r"\s*([12])\s*[pP]\s*\+\s*(\d+)\s*", text)
        if not m:
            raise ConfigError(f"scheme must look like '1p+2' or '2P+1', got {text!r}")
        return cls(p=int(m.group(1)), k=int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.p}P+{self.k}"


@dataclass
class Example:
    """A fixed-length labeled window tied back to its meter's metadata."""

    meter_id: str
    window: Window
    label: bool
    meter: MeterRecord


@dataclass
class CountsReport:
    """Per-scheme bookkeeping of produced windows and the meters that yielded none."""

    scheme: str
    window_len: int
    positives: int = 0
    negatives: int = 0
    defective_meters: int = 0
    non_defective_meters: int = 0
    defective_no_plateau: int = 0
    defective_short_history: int = 0
    negative_too_short: int = 0
    negatives_excluded_plateau: int = 0
    decreasing_value_windows: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def find_plateau(series: ValidSeries) -> Optional[PlateauSpan]:
    """Locate the first maximal run of >= 2 exactly-equal consecutive values, if any."""
    values = series.values
    i = 0
    while i + 1 < len(values):
        if values[i] == values[i + 1]:
            j = i + 1
            while j + 1 < len(values) and values[j + 1] == values[i]:
                j += 1
            return PlateauSpan(start=i, length=j - i + 1)
        i += 1
    return None


def build_positive(series: ValidSeries, p: int, k: int,
                   meter: MeterRecord) -> Optional[Example]:
    """Window a defective meter's series around its first plateau, or None.

    Needs at least p plateau readings and k readings strictly before the
    plateau; insufficient history yields None (counted in the report).
    """
    span = find_plateau(series)
    if span is None or span.length < p or span.start < k:
        return None
    window = series.points[span.start - k: span.start + p]
    return Example(meter_id=series.meter_id, window=list(window), label=True, meter=meter)


def build_negative(series: ValidSeries, window_len: int,
                   meter: MeterRecord) -> Optional[Example]:
    """Most recent window_len readings of a healthy meter's series, or None if too short."""
    if len(series) < window_len:
        return None
    window = series.points[-window_len:]
    return Example(meter_id=series.meter_id, window=list(window), label=False, meter=meter)


def _window_has_decrease(window: Window) -> bool:
    return any(b < a for (_, a), (_, b) in zip(window, window[1:]))


def build_dataset(series_by_meter: Mapping[str, Sequence[ValidSeries]],
                  meters: Mapping[str, MeterRecord],
                  scheme: Scheme,
                  exclude_plateau_negatives: bool = False,
                  ) -> tuple[list[Example], CountsReport]:
    """Build the labeled dataset for one scheme across a whole fleet.

    Positives come from defective meters (first segment, in time order, that
    yields a window); negatives from non-defective meters (one each, from the
    longest eligible segment, ties resolved toward the most recent one, with
    window length k+p). Rollover-style decreasing counter values do not
    invalidate a window but are surfaced as a warning statistic.
    """
    report = CountsReport(scheme=str(scheme), window_len=scheme.window_len)
    examples: list[Example] = []
    for meter_id, record in meters.items():
        segments = list(series_by_meter.get(meter_id, []))
        if record.defective:
            report.defective_meters += 1
            example = None
            saw_plateau = False
            for s in segments:
                span = find_plateau(s)
                if span is not None:
                    saw_plateau = True
                example = build_positive(s, scheme.p, scheme.k, record)
                if example is not None:
                    break
            if example is None:
                if saw_plateau:
                    report.defective_short_history += 1
                else:
                    report.defective_no_plateau += 1
                continue
            report.positives += 1
        else:
            report.non_defective_meters += 1
            eligible = [s for s in segments if len(s) >= scheme.window_len]
            if exclude_plateau_negatives:
                with_plateau = [s for s in eligible if find_plateau(s) is not None]
                if with_plateau:
                    report.negatives_excluded_plateau += len(with_plateau)
                eligible = [s for s in eligible if find_plateau(s) is None]
            if not eligible:
                report.negative_too_short += 1
                continue
            # longest segment wins; on a tie the most recent (later) one does
            best = max(enumerate(eligible), key=lambda item: (len(item[1]), item[0]))[1]
            example = build_negative(best, scheme.window_len, record)
            assert example is not None
            report.negatives += 1
        if _window_has_decrease(example.window):
            report.decreasing_value_windows += 1
        examples.append(example)

    if report.positives == 0 or report.negatives == 0:
        raise DataError(
            f"untrainable dataset for scheme {scheme}: "
            f"{report.positives} positives / {report.negatives} negatives",
            scheme=str(scheme),
        )
    return examples, report


def windows_to_csv(examples: Iterable[Example]) -> str:
    """Serialize a dataset's windows as CSV, one row per example."""
    examples = list(examples)
    if not examples:
        return ""
    length = len(examples[0].window)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["meter_id", "label"]
    for i in range(1, length + 1):
        header += [f"t{i}", f"v{i}"]
    writer.writerow(header)
    for ex in examples:
        row = [ex.meter_id, "1" if ex.label else "0"]
        for t, v in ex.window:
            row += [t.isoformat(), repr(v)]
        writer.writerow(row)
    return buf.getvalue()
