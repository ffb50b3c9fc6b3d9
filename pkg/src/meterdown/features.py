"""Numeric encodings: per-step continuous features and one-hot categoricals.

The continuous input for a window of length L is an (L-1, 2) matrix of
(consumption delta, gap in days) per step, z-scored with statistics fit on
training data only. Categorical attributes are one-hot encoded against a
vocabulary also built on training data only; unseen categories map to an
all-zero block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError
from .ingest import MeterRecord
from .label import Example, Window

ATTRIBUTES = ("producer", "meter_type", "year_of_construction", "contract_type")

_STD_FLOOR = 1e-12


def window_steps(window: Window) -> np.ndarray:
    """Raw per-step features of a window: rows of (value delta, gap days)."""
    if len(window) < 2:
        raise DataError(f"window must have >= 2 readings, got {len(window)}")
    out = np.empty((len(window) - 1, 2), dtype=np.float64)
    for i, ((t0, v0), (t1, v1)) in enumerate(zip(window, window[1:])):
        out[i, 0] = v1 - v0
        out[i, 1] = (t1 - t0).days
    return out


@dataclass
class Scaler:
    """Per-feature mean and standard deviation, fit on training windows only."""

    mean: np.ndarray
    std: np.ndarray

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Scaler":
        return cls(mean=np.asarray(data["mean"], dtype=np.float64),
                   std=np.asarray(data["std"], dtype=np.float64))

    @classmethod
    def identity(cls, n_features: int = 2) -> "Scaler":
        return cls(mean=np.zeros(n_features), std=np.ones(n_features))


def fit_scaler(windows: Iterable[Window]) -> Scaler:
    """Compute per-feature statistics over every step of the training windows.

    A degenerate (constant) feature gets its std forced to 1 so standardized
    values come out as exactly 0.
    """
    steps = [window_steps(w) for w in windows]
    if not steps:
        raise DataError("cannot fit a scaler on an empty training set")
    stacked = np.concatenate(steps, axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std < _STD_FLOOR, 1.0, std)
    return Scaler(mean=mean, std=std)


def encode_continuous(window: Window, scaler: Scaler) -> np.ndarray:
    """Standardized (L-1, 2) step matrix for one window."""
    return (window_steps(window) - scaler.mean) / scaler.std


@dataclass
class CategoricalVocab:
    """Ordered category lists per attribute, fit on training meters only."""

    attributes: tuple[str, ...]
    categories: dict[str, list]
    _index: dict[str, dict] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._index = {
            attr: {cat: i for i, cat in enumerate(cats)}
            for attr, cats in self.categories.items()
        }

    @property
    def dim(self) -> int:
        return sum(len(self.categories[a]) for a in self.attributes)

    def to_json(self) -> dict:
        return {"attributes": list(self.attributes),
                "categories": {a: list(self.categories[a]) for a in self.attributes}}

    @classmethod
    def from_json(cls, data: dict) -> "CategoricalVocab":
        return cls(attributes=tuple(data["attributes"]),
                   categories={a: list(v) for a, v in data["categories"].items()})


def build_vocab(meters: Iterable[MeterRecord],
                attributes: Sequence[str] = ATTRIBUTES) -> CategoricalVocab:
    """Collect the distinct categories per attribute, deterministically sorted."""
    meters = list(meters)
    if not meters:
        raise DataError("cannot build a vocabulary on an empty training set")
    unknown = [a for a in attributes if a not in ATTRIBUTES]
    if unknown:
        raise DataError(f"unknown categorical attributes: {unknown}")
    categories = {
        attr: sorted({getattr(m, attr) for m in meters})
        for attr in attributes
    }
    return CategoricalVocab(attributes=tuple(attributes), categories=categories)


def encode_categorical(meter: MeterRecord, vocab: CategoricalVocab) -> np.ndarray:
    """Concatenated one-hot blocks, one per attribute; unseen category -> zero block."""
    out = np.zeros(vocab.dim, dtype=np.float64)
    offset = 0
    for attr in vocab.attributes:
        idx = vocab._index[attr].get(getattr(meter, attr))
        if idx is not None:
            out[offset + idx] = 1.0
        offset += len(vocab.categories[attr])
    return out


def encode_examples(examples: Sequence[Example],
                    scaler: Scaler,
                    vocab: Optional[CategoricalVocab] = None,
                    ) -> tuple[np.ndarray, Optional[np.ndarray], np.ndarray]:
    """Batch-encode a dataset: (x_seq (T,B,2), x_cat (B,C) or None, labels (B,)).

    All windows must share one length; that is what fixed-length schemes
    guarantee.
    """
    if not examples:
        raise DataError("cannot encode an empty example list")
    lengths = {len(ex.window) for ex in examples}
    if len(lengths) > 1:
        raise DataError(f"examples mix window lengths: {sorted(lengths)}")
    steps = np.stack([encode_continuous(ex.window, scaler) for ex in examples])  # (B, T, 2)
    x_seq = np.ascontiguousarray(steps.transpose(1, 0, 2))
    x_cat = None
    if vocab is not None:
        x_cat = np.stack([encode_categorical(ex.meter, vocab) for ex in examples])
    y = np.array([1.0 if ex.label else 0.0 for ex in examples], dtype=np.float64)
    return x_seq, x_cat, y
