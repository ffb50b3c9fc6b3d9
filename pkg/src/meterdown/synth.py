"""Synthetic meter fleets with known ground truth.

Each meter gets a log-normal daily consumption rate; readings are cumulative
sums over jittered intervals, rounded to liters (3 decimals) with a floor on
every increment so healthy counters strictly increase. Defective meters
under-register their final interval (the mechanism dies partway through it)
and then go exactly flat from the sampled onset index onward: the failure
plateau. Healthy meters can optionally carry a benign zero-consumption tail
run (vacancy) or a final-interval consumption dip drawn from the same
truncation law as a failure; the dip is the knob that makes the continuous
channel ambiguous on purpose, so categorical signal has measurable headroom.

Categorical attributes are label-independent in "noise" mode; in
"informative" mode the producer attribute encodes the defect label, wrong
with probability flip_prob, planting recoverable mutual information.

Generation is fully deterministic: one fleet seed spawns per-meter streams,
so meters are independent and order-insensitive.
"""

from __future__ import annotations

import datetime as dt
import itertools
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .ingest import MeterRecord, RawReading, meters_to_csv, readings_to_csv
from .validate import DEFAULT_GAP_LIMIT_DAYS

PRODUCERS = ("AQUAFLOW", "BLUEKIT", "CASCADE", "DRIPSTOP")
SIGNAL_PRODUCER = PRODUCERS[0]
METER_TYPES = ("dry-dial", "multi-jet", "piston", "ultrasonic")
CONTRACTS = ("commercial", "industrial", "residential")
YEAR_RANGE = (1998, 2015)

BASE_DATE = dt.date(2015, 1, 1)

_MIN_INCREMENT = 0.01  # cubic meters; keeps rounded healthy counters strictly increasing


@dataclass
class FleetConfig:
    meters: int = 100
    defective_fraction: float = 0.2
    readings_min: int = 10
    readings_max: int = 24
    interval_mean_days: int = 30
    interval_jitter_days: int = 7
    rate_median: float = 0.3        # cubic meters per day, log-normal median
    rate_sigma: float = 0.6
    delta_sigma: float = 0.2        # extra per-interval consumption jitter
    onset_min: int = 1              # plateau onset index range for defective meters
    onset_max: int = 12
    failure_slowdown: float = 0.3   # a dying meter registers only U(0, this) of its
                                    # final interval's consumption before seizing
    categorical_mode: str = "noise"  # "informative" plants the producer signal
    flip_prob: float = 0.1
    benign_zero_rate: float = 0.0   # fraction of healthy meters with a flat tail run
    benign_zero_len: tuple[int, int] = (2, 2)
    benign_dip_rate: float = 0.0    # fraction of healthy meters whose final interval
                                    # dips like a failure one (seasonal absence)
    seed: int = 0

    def __post_init__(self):
        if self.meters < 2:
            raise ConfigError(f"need at least 2 meters, got {self.meters}")
        if not 0.0 < self.defective_fraction < 1.0:
            raise ConfigError(
                f"defective_fraction must be in (0, 1), got {self.defective_fraction}")
        if self.readings_min < 3 or self.readings_max < self.readings_min:
            raise ConfigError(
                f"readings range must satisfy 3 <= min <= max, got "
                f"[{self.readings_min}, {self.readings_max}]")
        if not 1 <= self.interval_mean_days < DEFAULT_GAP_LIMIT_DAYS:
            raise ConfigError(
                f"interval_mean_days must be in [1, {DEFAULT_GAP_LIMIT_DAYS}), "
                f"got {self.interval_mean_days}")
        if not 0 <= self.interval_jitter_days < self.interval_mean_days:
            raise ConfigError("interval_jitter_days must be in [0, interval_mean_days)")
        if self.categorical_mode not in ("noise", "informative"):
            raise ConfigError(
                f"categorical_mode must be 'noise' or 'informative', got {self.categorical_mode!r}")
        if not 0.0 <= self.flip_prob <= 0.5:
            raise ConfigError(f"flip_prob must be in [0, 0.5], got {self.flip_prob}")
        if not 0.0 <= self.benign_zero_rate <= 1.0:
            raise ConfigError(f"benign_zero_rate must be in [0, 1], got {self.benign_zero_rate}")
        if not 0.0 <= self.benign_dip_rate <= 1.0:
            raise ConfigError(f"benign_dip_rate must be in [0, 1], got {self.benign_dip_rate}")
        if self.benign_zero_rate + self.benign_dip_rate > 1.0:
            raise ConfigError("benign_zero_rate + benign_dip_rate must not exceed 1")
        if not 0.0 < self.failure_slowdown <= 1.0:
            raise ConfigError(f"failure_slowdown must be in (0, 1], got {self.failure_slowdown}")
        lo, hi = self.benign_zero_len
        if not 2 <= lo <= hi:
            raise ConfigError(f"benign_zero_len must satisfy 2 <= lo <= hi, got {self.benign_zero_len}")
        if not 1 <= self.onset_min <= self.onset_max:
            raise ConfigError("onset range must satisfy 1 <= onset_min <= onset_max")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    def to_json(self) -> dict:
        out = asdict(self)
        out["benign_zero_len"] = list(self.benign_zero_len)
        return out


def _pick_producer(rng: np.random.Generator, defective: bool, config: FleetConfig) -> str:
    if config.categorical_mode == "noise":
        return str(rng.choice(PRODUCERS))
    others = [p for p in PRODUCERS if p != SIGNAL_PRODUCER]
    signal_side = defective if rng.random() >= config.flip_prob else not defective
    return SIGNAL_PRODUCER if signal_side else str(rng.choice(others))


def _meter_series(rng: np.random.Generator, n: int, defective: bool,
                  config: FleetConfig) -> tuple[list[dt.date], list[float]]:
    start = BASE_DATE + dt.timedelta(days=int(rng.integers(0, 365)))
    lo = config.interval_mean_days - config.interval_jitter_days
    hi = config.interval_mean_days + config.interval_jitter_days
    gaps = rng.integers(lo, hi + 1, size=n - 1)
    dates = [start]
    for g in gaps:
        dates.append(dates[-1] + dt.timedelta(days=int(g)))

    rate = config.rate_median * float(np.exp(config.rate_sigma * rng.standard_normal()))
    deltas = [max(rate * float(g) * float(np.exp(config.delta_sigma * rng.standard_normal())),
                  _MIN_INCREMENT)
              for g in gaps]

    if defective:
        # final registered interval is truncated (the meter dies partway
        # through it), then the counter freezes: the plateau
        onset_lo = max(1, min(config.onset_min, n - 2))
        onset_hi = max(onset_lo, min(config.onset_max, n - 2))
        onset = int(rng.integers(onset_lo, onset_hi + 1))
        deltas[onset - 1] = max(float(rng.uniform(0.0, config.failure_slowdown)) * deltas[onset - 1],
                                _MIN_INCREMENT)
        for j in range(onset, n - 1):
            deltas[j] = 0.0
    else:
        u = rng.random()
        if u < config.benign_zero_rate:
            # vacancy: a flat tail run of exactly-equal readings
            lo_len, hi_len = config.benign_zero_len
            run = min(int(rng.integers(lo_len, hi_len + 1)), n - 1)
            for j in range(n - run, n - 1):
                deltas[j] = 0.0
        elif u < config.benign_zero_rate + config.benign_dip_rate:
            # absence: the final interval dips exactly like a failure one
            deltas[n - 2] = max(float(rng.uniform(0.0, config.failure_slowdown)) * deltas[n - 2],
                                _MIN_INCREMENT)

    values = [round(float(rng.uniform(50.0, 500.0)), 3)]
    for delta in deltas:
        values.append(round(values[-1] + delta, 3))
    return dates, values


def generate(config: FleetConfig) -> tuple[list[RawReading], list[MeterRecord]]:
    """Produce a fleet of readings and meter records, seeded-deterministic.

    Exactly round(meters * defective_fraction) meters (clamped to keep both
    classes non-empty) are defective; which ones is a seeded permutation, so
    labels do not correlate with meter index.
    """
    root = np.random.SeedSequence(config.seed)
    streams = root.spawn(config.meters + 1)
    fleet_rng = np.random.default_rng(streams[0])

    n_defective = int(round(config.meters * config.defective_fraction))
    n_defective = min(max(n_defective, 1), config.meters - 1)
    defective_ids = set(fleet_rng.permutation(config.meters)[:n_defective].tolist())

    width = max(4, len(str(config.meters)))
    readings: list[RawReading] = []
    meters: list[MeterRecord] = []
    for i in range(config.meters):
        rng = np.random.default_rng(streams[i + 1])
        meter_id = f"m{i:0{width}d}"
        defective = i in defective_ids
        n = int(rng.integers(config.readings_min, config.readings_max + 1))
        dates, values = _meter_series(rng, n, defective, config)
        for ts, value in zip(dates, values):
            readings.append(RawReading(meter_id=meter_id, timestamp=ts, value=value,
                                       process_ok=True, congruent=True))
        meters.append(MeterRecord(
            meter_id=meter_id,
            producer=_pick_producer(rng, defective, config),
            meter_type=str(rng.choice(METER_TYPES)),
            year_of_construction=int(rng.integers(YEAR_RANGE[0], YEAR_RANGE[1] + 1)),
            contract_type=str(rng.choice(CONTRACTS)),
            defective=defective,
        ))
    return readings, meters


def generate_csv(config: FleetConfig) -> tuple[str, str]:
    """Same fleet as generate(), rendered to the two interchange CSV formats."""
    readings, meters = generate(config)
    return readings_to_csv(readings), meters_to_csv(meters)


# ---------------------------------------------------------------------------
# quality-noise injection


@dataclass
class NoiseRates:
    process_fail: float = 0.0
    incongruent: float = 0.0
    gap: float = 0.0
    gap_days: int = DEFAULT_GAP_LIMIT_DAYS + 36

    def __post_init__(self):
        for name in ("process_fail", "incongruent", "gap"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{name} rate must be in [0, 1], got {rate}")
        if self.gap_days <= DEFAULT_GAP_LIMIT_DAYS:
            raise ConfigError(
                f"gap_days must exceed the {DEFAULT_GAP_LIMIT_DAYS}-day limit to matter")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class InjectionSummary:
    process_flips: int = 0
    congruent_flips: int = 0
    gaps_inserted: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def inject_quality_noise(readings: Sequence[RawReading], rates: NoiseRates,
                         seed: int = 0) -> tuple[list[RawReading], InjectionSummary]:
    """Flip validity flags and insert over-limit gaps at the given rates.

    Gap insertion shifts a reading and everything after it (within its meter)
    by rates.gap_days, so a rate of 1 turns every consecutive pair into a
    segmentation cut. All-zero rates return the input unchanged.
    """
    rng = np.random.default_rng([seed, 0x7E])
    summary = InjectionSummary()
    out: list[RawReading] = []
    for _, group in itertools.groupby(readings, key=lambda r: r.meter_id):
        offset = 0
        for j, r in enumerate(group):
            process_ok = r.process_ok
            congruent = r.congruent
            if rates.process_fail > 0 and rng.random() < rates.process_fail:
                if process_ok:
                    summary.process_flips += 1
                process_ok = False
            if rates.incongruent > 0 and rng.random() < rates.incongruent:
                if congruent:
                    summary.congruent_flips += 1
                congruent = False
            if j > 0 and rates.gap > 0 and rng.random() < rates.gap:
                offset += rates.gap_days
                summary.gaps_inserted += 1
            out.append(RawReading(meter_id=r.meter_id,
                                  timestamp=r.timestamp + dt.timedelta(days=offset),
                                  value=r.value, process_ok=process_ok,
                                  congruent=congruent))
    return out, summary
