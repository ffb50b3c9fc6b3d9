import datetime as dt

import numpy as np
import pytest

from meterdown.errors import ConfigError, DataError
from meterdown.ingest import RawReading
from meterdown.validate import (DEFAULT_GAP_LIMIT_DAYS, filter_valid, segment,
                                validate_fleet)

from oracles import cut_scan_segments


def test_filter_keeps_fully_flagged_only(make_readings):
    rows = make_readings([0, 10, 20], [1, 2, 3])
    rows[1] = RawReading("m1", rows[1].timestamp, 2.0, True, False)
    kept = filter_valid(rows)
    assert [r.value for r in kept] == [1.0, 3.0]


def test_filter_empty_and_all_invalid(make_readings):
    assert filter_valid([]) == []
    rows = make_readings([0, 10], [1, 2], process_ok=False)
    assert filter_valid(rows) == []


def test_filter_rejects_mixed_meters(make_readings):
    rows = make_readings([0], [1]) + make_readings([5], [2], meter_id="m2")
    with pytest.raises(DataError):
        filter_valid(rows)


def test_filter_idempotent(make_readings):
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(0, 40))
        rows = [
            RawReading("m1", dt.date(2018, 1, 1) + dt.timedelta(days=i), float(i),
                       bool(rng.integers(0, 2)), bool(rng.integers(0, 2)))
            for i in range(n)
        ]
        once = filter_valid(rows)
        assert filter_valid(once) == once


def test_segment_splits_at_over_limit_gap(make_readings):
    # cumulative offsets for gaps of 30, 300, 25 days
    rows = make_readings([0, 30, 330, 355], [1, 2, 3, 4])
    segs = segment(rows, 214)
    assert [len(s) for s in segs] == [2, 2]
    assert segs[0].values == [1, 2] and segs[1].values == [3, 4]


def test_segment_single_reading(make_readings):
    segs = segment(make_readings([0], [5]))
    assert len(segs) == 1 and len(segs[0]) == 1


def test_segment_rejects_unsorted(make_readings):
    rows = make_readings([10, 0], [1, 2])
    with pytest.raises(DataError):
        segment(rows)


def test_segment_rejects_bad_limit(make_readings):
    with pytest.raises(ConfigError):
        segment(make_readings([0], [1]), gap_limit_days=0)


def test_duplicate_timestamps_keep_last(make_readings):
    rows = make_readings([0, 10, 10, 20], [1, 2, 9, 3])
    segs = segment(rows)
    assert segs[0].values == [1, 9, 3]


def test_segment_matches_cut_scan_oracle(make_readings):
    rng = np.random.default_rng(2024)
    for trial in range(12):
        n = 1000 if trial == 0 else int(rng.integers(1, 200))
        offsets = np.cumsum(rng.integers(1, 401, size=n)).tolist()
        values = rng.uniform(0, 1e4, size=n).round(3).tolist()
        rows = make_readings(offsets, values)
        limit = int(rng.integers(50, 400))
        segs = segment(rows, limit)
        expected = cut_scan_segments(rows, limit)
        assert [s.points for s in segs] == expected


def test_segment_properties(make_readings):
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(1, 120))
        gaps = rng.integers(1, 400, size=n - 1) if n > 1 else []
        offsets = [0] + np.cumsum(gaps).tolist() if n > 1 else [0]
        rows = make_readings(offsets, range(n))
        limit = int(rng.integers(30, 380))
        segs = segment(rows, limit)
        # partition: lengths sum to deduplicated input length, order preserved
        assert sum(len(s) for s in segs) == n
        flat = [p for s in segs for p in s.points]
        assert flat == [(r.timestamp, r.value) for r in rows]
        for s in segs:
            ts = s.timestamps
            assert all(b > a for a, b in zip(ts, ts[1:]))
            assert all((b - a).days <= limit for a, b in zip(ts, ts[1:]))
        # maximality: joining adjacent segments would violate the limit
        for a, b in zip(segs, segs[1:]):
            assert (b.timestamps[0] - a.timestamps[-1]).days > limit


def test_validate_fleet_summary(make_readings):
    rows = make_readings([0, 30, 300, 330], [1, 2, 3, 4])
    rows[1] = RawReading("m1", rows[1].timestamp, 2.0, False, True)
    rows += make_readings([0, 10], [5, 6], meter_id="m2", congruent=False)
    series, summary = validate_fleet(rows, DEFAULT_GAP_LIMIT_DAYS)
    assert summary["meters"] == 2
    assert summary["readings_total"] == 6
    assert summary["dropped_process_failed"] == 1
    assert summary["dropped_incongruent"] == 2
    assert summary["readings_kept"] == 3
    assert summary["gap_cuts"] == 1
    assert len(series["m1"]) == 2 and series["m2"] == []
