import datetime as dt

import numpy as np
import pytest

from meterdown.errors import ConfigError, DataError
from meterdown.ingest import MeterRecord
from meterdown.label import (PlateauSpan, Scheme, build_dataset,
                             build_negative, build_positive, find_plateau,
                             windows_to_csv)
from meterdown.synth import FleetConfig, NoiseRates, generate, inject_quality_noise
from meterdown.validate import ValidSeries, validate_fleet

from oracles import enumerate_windows


def series(values, meter_id="m1", start=dt.date(2019, 1, 1), step=30):
    points = [(start + dt.timedelta(days=i * step), float(v)) for i, v in enumerate(values)]
    return ValidSeries(meter_id, points)


METER = MeterRecord("m1", "ACME", "dry-dial", 2010, "residential", True)
HEALTHY = MeterRecord("m1", "ACME", "dry-dial", 2010, "residential", False)


def test_find_plateau_examples():
    assert find_plateau(series([10, 12, 12, 12, 15])) == PlateauSpan(start=1, length=3)
    assert find_plateau(series([1, 2, 3])) is None
    assert find_plateau(series([5, 5])) == PlateauSpan(start=0, length=2)
    # first maximal run wins even if a later one is longer
    assert find_plateau(series([1, 2, 2, 3, 4, 4, 4])) == PlateauSpan(start=1, length=2)


def test_build_positive_window_values():
    ex = build_positive(series([8, 9, 11, 11, 11]), p=1, k=2, meter=METER)
    assert [v for _, v in ex.window] == [8, 9, 11]
    assert ex.label is True


def test_build_positive_needs_preceding_readings():
    assert build_positive(series([11, 11, 11]), p=1, k=1, meter=METER) is None
    assert build_positive(series([1, 2, 3]), p=1, k=1, meter=METER) is None
    # k readings strictly before, p plateau readings in the window
    ex = build_positive(series([8, 9, 11, 11, 11]), p=2, k=1, meter=METER)
    assert [v for _, v in ex.window] == [9, 11, 11]


def test_build_negative_most_recent_window():
    ex = build_negative(series([1, 2, 3, 4, 5, 6]), window_len=4, meter=HEALTHY)
    assert [v for _, v in ex.window] == [3, 4, 5, 6]
    assert ex.label is False
    assert build_negative(series([1, 2, 3]), window_len=4, meter=HEALTHY) is None


def test_scheme_parsing():
    assert Scheme.parse("1p+2") == Scheme(1, 2)
    assert str(Scheme.parse("2P + 1")) == "2P+1"
    assert Scheme(1, 4).window_len == 5
    with pytest.raises(ConfigError):
        Scheme.parse("3p+1")
    with pytest.raises(ConfigError):
        Scheme(1, 0)


def _fleet(config):
    readings, meters = generate(config)
    series_by_meter, _ = validate_fleet(readings)
    return series_by_meter, {m.meter_id: m for m in meters}


def test_counts_match_enumeration_oracle():
    # 500 defective series plus healthy ones, including gap-noise so some
    # meters carry several segments
    config = FleetConfig(meters=1000, defective_fraction=0.5, seed=99)
    readings, meters = generate(config)
    readings, _ = inject_quality_noise(readings, NoiseRates(gap=0.05), seed=4)
    series_by_meter, _ = validate_fleet(readings)
    mmap = {m.meter_id: m for m in meters}
    for p in (1, 2):
        for k in (1, 2, 3, 4):
            examples, report = build_dataset(series_by_meter, mmap, Scheme(p, k))
            exp_pos, exp_neg = enumerate_windows(series_by_meter, mmap, p, k)
            got_pos = {ex.meter_id: tuple(ex.window) for ex in examples if ex.label}
            got_neg = {ex.meter_id: tuple(ex.window) for ex in examples if not ex.label}
            assert got_pos == exp_pos
            assert got_neg == exp_neg
            assert report.positives == len(exp_pos)
            assert report.negatives == len(exp_neg)


def test_positive_counts_monotone_in_k():
    series_by_meter, mmap = _fleet(FleetConfig(meters=600, defective_fraction=0.4, seed=21))
    for p in (1, 2):
        counts = []
        for k in (1, 2, 3, 4, 5):
            _, report = build_dataset(series_by_meter, mmap, Scheme(p, k))
            counts.append(report.positives)
        assert all(a >= b for a, b in zip(counts, counts[1:]))
    for k in (1, 2, 3):
        _, r1 = build_dataset(series_by_meter, mmap, Scheme(1, k))
        _, r2 = build_dataset(series_by_meter, mmap, Scheme(2, k))
        assert r2.positives <= r1.positives


def test_every_nondefective_with_enough_readings_yields_one_negative():
    series_by_meter, mmap = _fleet(FleetConfig(meters=300, defective_fraction=0.2,
                                               readings_min=8, seed=3))
    scheme = Scheme(1, 2)
    _, report = build_dataset(series_by_meter, mmap, scheme)
    healthy = sum(1 for m in mmap.values() if not m.defective)
    assert report.negatives == healthy


def test_positive_plateau_suffix_is_a_plateau():
    series_by_meter, mmap = _fleet(FleetConfig(meters=200, defective_fraction=0.5, seed=8))
    for p, k in ((1, 1), (2, 2)):
        examples, _ = build_dataset(series_by_meter, mmap, Scheme(p, k))
        for ex in examples:
            if not ex.label:
                continue
            tail = [v for _, v in ex.window[-p:]]
            assert len(set(tail)) == 1
            if p == 2:
                assert find_plateau(ValidSeries(ex.meter_id, ex.window)) is not None


def test_windows_never_cross_segment_gaps():
    config = FleetConfig(meters=400, defective_fraction=0.3, seed=13)
    readings, meters = generate(config)
    readings, _ = inject_quality_noise(readings, NoiseRates(gap=0.1), seed=5)
    series_by_meter, _ = validate_fleet(readings)
    mmap = {m.meter_id: m for m in meters}
    examples, _ = build_dataset(series_by_meter, mmap, Scheme(1, 2))
    for ex in examples:
        ts = [t for t, _ in ex.window]
        assert all((b - a).days <= 214 for a, b in zip(ts, ts[1:]))


def test_untrainable_dataset_raises():
    s = {"m1": [series([1, 2, 3, 4])]}
    meters = {"m1": HEALTHY}
    with pytest.raises(DataError):
        build_dataset(s, meters, Scheme(1, 2))


def test_exclude_plateau_negatives_flag():
    config = FleetConfig(meters=400, defective_fraction=0.2, benign_zero_rate=0.5,
                         benign_zero_len=(2, 3), seed=17)
    series_by_meter, mmap = _fleet(config)
    _, keep = build_dataset(series_by_meter, mmap, Scheme(1, 2))
    _, drop = build_dataset(series_by_meter, mmap, Scheme(1, 2),
                            exclude_plateau_negatives=True)
    assert drop.negatives < keep.negatives
    assert drop.negatives_excluded_plateau > 0
    examples, _ = build_dataset(series_by_meter, mmap, Scheme(1, 2),
                                exclude_plateau_negatives=True)
    for ex in examples:
        if not ex.label:
            values = [v for _, v in ex.window]
            assert all(a != b for a, b in zip(values, values[1:]))


def test_decreasing_counter_surfaced_not_dropped(make_readings):
    s = {
        "m1": [series([5, 6, 7, 7, 7])],          # defective, fine
        "m2": [series([10, 9, 11, 12], meter_id="m2")],  # rollover dip in window
    }
    meters = {
        "m1": METER,
        "m2": MeterRecord("m2", "ACME", "dry-dial", 2010, "residential", False),
    }
    examples, report = build_dataset(s, meters, Scheme(1, 2))
    assert report.negatives == 1
    assert report.decreasing_value_windows == 1
    assert len(examples) == 2


def test_windows_to_csv_shape():
    s = {"m1": [series([5, 6, 7, 7])],
         "m2": [series([1, 2, 3, 4], meter_id="m2")]}
    meters = {"m1": METER,
              "m2": MeterRecord("m2", "Z", "t", 2000, "c", False)}
    examples, _ = build_dataset(s, meters, Scheme(1, 2))
    text = windows_to_csv(examples)
    lines = text.strip().split("\n")
    assert lines[0] == "meter_id,label,t1,v1,t2,v2,t3,v3"
    assert len(lines) == 3
