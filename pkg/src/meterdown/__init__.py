"""Desk-scale water-meter failure prediction.

Pipeline: ingest reading/meter CSVs -> validity filtering and gap
segmentation -> plateau-based window labeling -> continuous/categorical
feature encoding -> GRU classifiers (continuous-only dnn1, dual-branch dnn2)
trained with Adam on binary cross-entropy -> ROC/AUC evaluation with
stratified holdout and 10-fold cross-validation. A seeded synthetic fleet
generator provides ground truth for end-to-end verification.
"""

__version__ = "0.1.0"

from .errors import (BundleError, ConfigError, CsvFormatError, DataError,
                     MeterdownError, ShapeError)
from .ingest import (MeterRecord, RawReading, meters_to_csv, parse_meters,
                     parse_readings, readings_to_csv)
from .validate import (DEFAULT_GAP_LIMIT_DAYS, ValidSeries, filter_valid,
                       segment, validate_fleet)
from .label import (CountsReport, Example, PlateauSpan, Scheme,
                    build_dataset, build_negative, build_positive,
                    find_plateau)
from .features import (ATTRIBUTES, CategoricalVocab, Scaler, build_vocab,
                       encode_categorical, encode_continuous,
                       encode_examples, fit_scaler)
from .models import (Bundle, Model, TrainConfig, init_model, load_bundle,
                     predict, save_bundle, train)
from .evaluate import (ExperimentConfig, ExperimentReport, auc, holdout_split,
                       kfold, roc_points, run_experiment, train_and_score,
                       trapezoid_area)
from .synth import (FleetConfig, NoiseRates, generate, generate_csv,
                    inject_quality_noise)

__all__ = [name for name in dir() if not name.startswith("_")]
