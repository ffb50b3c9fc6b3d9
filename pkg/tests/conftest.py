import datetime as dt

import pytest

from meterdown.ingest import RawReading


@pytest.fixture
def make_readings():
    """Build a single-meter reading list from day offsets and values."""
    def _make(day_offsets, values, meter_id="m1", process_ok=True, congruent=True,
              start=dt.date(2018, 1, 1)):
        out = []
        for off, value in zip(day_offsets, values):
            out.append(RawReading(meter_id=meter_id,
                                  timestamp=start + dt.timedelta(days=off),
                                  value=float(value),
                                  process_ok=process_ok, congruent=congruent))
        return out
    return _make
