"""ROC/AUC, stratified splits, and the cross-validation experiment runner.

AUC uses the rank (Mann-Whitney) formulation with ties counting one half:
the probability that a uniformly random positive outranks a uniformly random
negative. roc_points() sweeps every distinct score as a threshold; the
trapezoid area under that curve equals the rank AUC.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import models
from .errors import ConfigError, DataError
from .features import (ATTRIBUTES, build_vocab, encode_examples, fit_scaler)
from .ingest import MeterRecord
from .label import Example, Scheme, build_dataset
from .models import Model, TrainConfig
from .validate import ValidSeries


def _check_two_classes(labels: np.ndarray) -> tuple[int, int]:
    n_pos = int(labels.sum())
    n_neg = int(len(labels) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs at least one positive and one negative")
    return n_pos, n_neg


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Tie-aware rank AUC: P(random positive > random negative) + P(tie)/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise DataError(f"scores and labels differ in length: {scores.shape} vs {labels.shape}")
    n_pos, n_neg = _check_two_classes(labels)

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank over the tie group
        i = j + 1
    rank_sum_pos = float(ranks[labels].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(scores: Sequence[float], labels: Sequence[bool]) -> list[tuple[float, float]]:
    """(FPR, TPR) points from a descending threshold sweep, endpoints included."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos, n_neg = _check_two_classes(labels)

    order = np.argsort(-scores, kind="mergesort")
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(scores):
        j = i
        threshold = scores[order[i]]
        while j < len(scores) and scores[order[j]] == threshold:
            if labels[order[j]]:
                tp += 1
            else:
                fp += 1
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def trapezoid_area(points: Sequence[tuple[float, float]]) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def derive_seed(*parts: int) -> int:
    """Stable child seed from an integer path, for per-fold reproducibility."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def holdout_split(examples: Sequence[Example], fraction: float = 0.8,
                  seed: int = 0) -> tuple[list[Example], list[Example]]:
    """Disjoint, exhaustive, label-stratified train/test split (seeded).

    Class proportions are preserved to within one example per split; output
    lists keep the original dataset order.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"holdout fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng([seed, 0x51])
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in (True, False):
        idx = np.array([i for i, ex in enumerate(examples) if ex.label == label], dtype=int)
        rng.shuffle(idx)
        n_train = math.floor(fraction * len(idx) + 0.5)
        train_idx.extend(idx[:n_train])
        test_idx.extend(idx[n_train:])
    train_idx.sort()
    test_idx.sort()
    return [examples[i] for i in train_idx], [examples[i] for i in test_idx]


def kfold(examples: Sequence[Example], k: int = 10,
          seed: int = 0) -> list[list[Example]]:
    """Stratified k folds: disjoint, exhaustive, sizes within one of each other.

    Each class is shuffled (seeded) and dealt round-robin; the second class
    starts dealing where the first class' remainder stopped so total fold
    sizes stay balanced. Every class must have at least k examples.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng([seed, 0xF0])
    fold_idx: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for label in (True, False):
        idx = np.array([i for i, ex in enumerate(examples) if ex.label == label], dtype=int)
        if len(idx) < k:
            raise DataError(
                f"class {label} has {len(idx)} examples, fewer than k={k}")
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            fold_idx[(j + offset) % k].append(int(i))
        offset = (offset + len(idx)) % k
    return [[examples[i] for i in sorted(fold)] for fold in fold_idx]


# ---------------------------------------------------------------------------
# experiment runner


@dataclass
class ExperimentConfig:
    arch: str = "dnn1"
    schemes: tuple[str, ...] = ("1P+1", "1P+2", "1P+3", "1P+4")
    train: TrainConfig = field(default_factory=TrainConfig)
    holdout_fraction: float = 0.8
    folds: int = 10
    attributes: tuple[str, ...] = ATTRIBUTES
    exclude_plateau_negatives: bool = False
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.arch not in models.ARCHS:
            raise ConfigError(f"arch must be one of {models.ARCHS}, got {self.arch!r}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["schemes"] = list(self.schemes)
        out["attributes"] = list(self.attributes)
        out["train"] = self.train.to_json()
        return out


@dataclass
class SchemeResult:
    scheme: str
    positives: int
    negatives: int
    fold_aucs: list[float]
    cv_auc: float
    test_auc: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ExperimentReport:
    rows: list[SchemeResult]
    config: dict
    seed: int
    schema_version: int = 1

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "config": self.config,
            "rows": [r.to_json() for r in self.rows],
        }

    def to_table(self) -> str:
        """Aligned text table, columns Readings | Cross-validation | Testing."""
        rows = [("Readings", "Cross-validation", "Testing")]
        for r in self.rows:
            rows.append((r.scheme, f"{100 * r.cv_auc:.1f}%", f"{100 * r.test_auc:.1f}%"))
        widths = [max(len(row[c]) for row in rows) for c in range(3)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _fit_encoders(train_examples: Sequence[Example], arch: str,
                  attributes: Sequence[str]):
    scaler = fit_scaler([ex.window for ex in train_examples])
    vocab = None
    if arch == "dnn2":
        vocab = build_vocab([ex.meter for ex in train_examples], attributes)
    return scaler, vocab


def train_and_score(train_examples: Sequence[Example],
                    eval_examples: Sequence[Example],
                    arch: str,
                    train_config: TrainConfig,
                    attributes: Sequence[str] = ATTRIBUTES,
                    init_seed: int = 0,
                    ) -> tuple[float, Model]:
    """Fit encoders + model on the train split, return AUC on the eval split.

    Encoders are fit on the training examples only, so nothing from the eval
    split leaks into the statistics or the vocabulary.
    """
    scaler, vocab = _fit_encoders(train_examples, arch, attributes)
    x_seq, x_cat, y = encode_examples(train_examples, scaler, vocab)
    model = models.init_model(arch, input_dim=2, hidden=train_config.hidden,
                              cat_dim=vocab.dim if vocab is not None else 0,
                              seed=init_seed)
    models.train(model, x_seq, x_cat, y, train_config)
    ex_seq, ex_cat, ey = encode_examples(eval_examples, scaler, vocab)
    scores = models.predict(model, ex_seq, ex_cat)
    return auc(scores, ey.astype(bool)), model


def run_experiment(series_by_meter: dict[str, list[ValidSeries]],
                   meters: dict[str, MeterRecord],
                   config: ExperimentConfig) -> ExperimentReport:
    """Full protocol per scheme: 10-fold CV on the 80% train split, then a
    fresh model trained on the whole 80% scored on the held-out 20%.

    Scalers and vocabularies are refit on each fold's training part. Folds
    may train in parallel (config.threads); results are deterministic in the
    seed either way.
    """
    rows: list[SchemeResult] = []
    for si, scheme_text in enumerate(config.schemes):
        scheme = Scheme.parse(scheme_text)
        examples, counts = build_dataset(series_by_meter, meters, scheme,
                                         config.exclude_plateau_negatives)
        train_ex, test_ex = holdout_split(examples, config.holdout_fraction,
                                          seed=derive_seed(config.seed, si, 0))
        folds = kfold(train_ex, config.folds, seed=derive_seed(config.seed, si, 1))

        def run_fold(i: int) -> float:
            val = folds[i]
            fit = [ex for j, fold in enumerate(folds) if j != i for ex in fold]
            cfg = TrainConfig(**{**config.train.to_json(),
                                 "seed": derive_seed(config.seed, si, 2, i)})
            fold_auc, _ = train_and_score(fit, val, config.arch, cfg,
                                          config.attributes,
                                          init_seed=derive_seed(config.seed, si, 3, i))
            return fold_auc

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                fold_aucs = list(pool.map(run_fold, range(len(folds))))
        else:
            fold_aucs = [run_fold(i) for i in range(len(folds))]

        cfg = TrainConfig(**{**config.train.to_json(),
                             "seed": derive_seed(config.seed, si, 4)})
        test_auc, _ = train_and_score(train_ex, test_ex, config.arch, cfg,
                                      config.attributes,
                                      init_seed=derive_seed(config.seed, si, 5))
        rows.append(SchemeResult(scheme=str(scheme),
                                 positives=counts.positives,
                                 negatives=counts.negatives,
                                 fold_aucs=[float(a) for a in fold_aucs],
                                 cv_auc=float(np.mean(fold_aucs)),
                                 test_auc=float(test_auc)))
    return ExperimentReport(rows=rows, config=config.to_json(), seed=config.seed)
