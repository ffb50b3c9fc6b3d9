"""Command-line front end: the pipeline as deterministic subcommands.

Every run writes a manifest (resolved config, seeds, input digests, tool
version, output paths) next to its outputs; identical invocations on
identical inputs produce byte-identical files, so no output embeds wall-clock
time. Pipeline failures exit 1 with a structured JSON error on stderr;
unknown flags exit 2 with usage text.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import MeterdownError
from .evaluate import ExperimentConfig, run_experiment
from .features import ATTRIBUTES, build_vocab, encode_examples, fit_scaler
from .ingest import read_meters_file, read_readings_file
from .label import Scheme, build_dataset, windows_to_csv
from .models import (TrainConfig, init_model, load_bundle, predict,
                     save_bundle, train)
from .synth import FleetConfig, NoiseRates, generate, inject_quality_noise
from .validate import DEFAULT_GAP_LIMIT_DAYS, validate_fleet
from .evaluate import auc as compute_auc

ENV_SEED = "METERDOWN_SEED"


def _json_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, subcommand: str, config: dict, seed: int,
                    inputs: dict[str, Path], outputs: list[Path]) -> Path:
    manifest = {
        "manifest_version": 1,
        "tool": "meterdown",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "inputs": {name: {"path": str(p), "sha256": _digest(p)}
                   for name, p in inputs.items()},
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    path.write_text(_json_dumps(manifest))
    return path


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    return int(env) if env else 0


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(sub, out_help: str) -> None:
    sub.add_argument("--seed", type=int, default=None,
                     help=f"run seed (default: ${ENV_SEED} or 0)")
    sub.add_argument("--out", required=True, help=out_help)


def _add_data_inputs(sub, meters: bool = True) -> None:
    sub.add_argument("--readings", required=True, help="readings CSV path")
    if meters:
        sub.add_argument("--meters", required=True, help="meters CSV path")
    sub.add_argument("--gap-limit-days", type=int, default=DEFAULT_GAP_LIMIT_DAYS,
                     help="max days between consecutive valid readings")


def _load_series(args):
    readings = read_readings_file(args.readings)
    series_by_meter, summary = validate_fleet(readings, args.gap_limit_days)
    return series_by_meter, summary


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    seed = _resolve_seed(args)
    base: dict = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    overrides = {
        "meters": args.meters,
        "defective_fraction": args.defective_fraction,
        "readings_min": args.readings_min,
        "readings_max": args.readings_max,
        "categorical_mode": args.mode,
        "flip_prob": args.flip_prob,
        "benign_zero_rate": args.benign_zero_rate,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if "benign_zero_len" in base:
        base["benign_zero_len"] = tuple(base["benign_zero_len"])
    base["seed"] = seed
    config = FleetConfig(**base)

    readings, meters = generate(config)
    rates = NoiseRates(process_fail=args.noise_process,
                       incongruent=args.noise_incongruent,
                       gap=args.noise_gap)
    summary = None
    if rates.process_fail or rates.incongruent or rates.gap:
        readings, summary = inject_quality_noise(readings, rates, seed=seed)

    out = _out_dir(args)
    from .ingest import meters_to_csv, readings_to_csv
    readings_path = out / "readings.csv"
    meters_path = out / "meters.csv"
    readings_path.write_text(readings_to_csv(readings))
    meters_path.write_text(meters_to_csv(meters))
    config_json = config.to_json()
    config_json["noise"] = rates.to_json()
    if summary is not None:
        config_json["noise_injected"] = summary.to_json()
    _write_manifest(out, "synth", config_json, seed, {},
                    [readings_path, meters_path])
    print(f"wrote {len(readings)} readings / {len(meters)} meters to {out}")
    return 0


def _cmd_validate(args) -> int:
    seed = _resolve_seed(args)
    _, summary = _load_series(args)
    out = _out_dir(args)
    summary_path = out / "summary.json"
    summary_path.write_text(_json_dumps(summary))
    _write_manifest(out, "validate", {"gap_limit_days": args.gap_limit_days},
                    seed, {"readings": Path(args.readings)}, [summary_path])
    print(_json_dumps(summary), end="")
    return 0


def _cmd_label(args) -> int:
    seed = _resolve_seed(args)
    series_by_meter, _ = _load_series(args)
    meters = read_meters_file(args.meters)
    scheme = Scheme.parse(args.scheme)
    examples, counts = build_dataset(series_by_meter, meters, scheme,
                                     args.exclude_plateau_negatives)
    out = _out_dir(args)
    windows_path = out / "windows.csv"
    counts_path = out / "counts.json"
    windows_path.write_text(windows_to_csv(examples))
    counts_path.write_text(_json_dumps(counts.to_json()))
    _write_manifest(out, "label",
                    {"scheme": str(scheme),
                     "gap_limit_days": args.gap_limit_days,
                     "exclude_plateau_negatives": args.exclude_plateau_negatives},
                    seed,
                    {"readings": Path(args.readings), "meters": Path(args.meters)},
                    [windows_path, counts_path])
    print(_json_dumps(counts.to_json()), end="")
    return 0


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                       learning_rate=args.learning_rate, seed=seed,
                       hidden=args.hidden)


def _attributes(args) -> tuple[str, ...]:
    return tuple(args.attributes.split(",")) if args.attributes else ATTRIBUTES


def _cmd_train(args) -> int:
    seed = _resolve_seed(args)
    series_by_meter, _ = _load_series(args)
    meters = read_meters_file(args.meters)
    scheme = Scheme.parse(args.scheme)
    examples, counts = build_dataset(series_by_meter, meters, scheme,
                                     args.exclude_plateau_negatives)
    scaler = fit_scaler([ex.window for ex in examples])
    vocab = build_vocab([ex.meter for ex in examples], _attributes(args)) \
        if args.arch == "dnn2" else None
    x_seq, x_cat, y = encode_examples(examples, scaler, vocab)
    config = _train_config(args, seed)
    model = init_model(args.arch, hidden=config.hidden,
                       cat_dim=vocab.dim if vocab else 0, seed=seed)
    history = train(model, x_seq, x_cat, y, config)

    bundle_path = Path(args.out)
    bundle_path.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle_path, model, scaler, vocab)
    _write_manifest(bundle_path.parent, "train",
                    {"arch": args.arch, "scheme": str(scheme),
                     "train": config.to_json(),
                     "gap_limit_days": args.gap_limit_days,
                     "attributes": list(_attributes(args)),
                     "counts": counts.to_json()},
                    seed,
                    {"readings": Path(args.readings), "meters": Path(args.meters)},
                    [bundle_path])
    print(f"trained {args.arch} on {len(examples)} examples "
          f"({counts.positives}+/{counts.negatives}-), final loss {history[-1]:.6f}")
    return 0


def _cmd_eval(args) -> int:
    seed = _resolve_seed(args)
    bundle = load_bundle(args.bundle)
    series_by_meter, _ = _load_series(args)
    meters = read_meters_file(args.meters)
    scheme = Scheme.parse(args.scheme)
    examples, _ = build_dataset(series_by_meter, meters, scheme)
    x_seq, x_cat, y = encode_examples(examples, bundle.scaler, bundle.vocab)
    scores = predict(bundle.model, x_seq, x_cat)

    out = _out_dir(args)
    scores_path = out / "scores.csv"
    lines = ["meter_id,label,score"]
    lines += [f"{ex.meter_id},{int(ex.label)},{score!r}"
              for ex, score in zip(examples, scores)]
    scores_path.write_text("\n".join(lines) + "\n")
    result = {"auc": compute_auc(scores, y.astype(bool)),
              "examples": len(examples),
              "positives": int(y.sum()), "negatives": int(len(y) - y.sum()),
              "scheme": str(scheme), "arch": bundle.model.arch}
    eval_path = out / "eval.json"
    eval_path.write_text(_json_dumps(result))
    _write_manifest(out, "eval", {"scheme": str(scheme)}, seed,
                    {"bundle": Path(args.bundle), "readings": Path(args.readings),
                     "meters": Path(args.meters)},
                    [scores_path, eval_path])
    print(_json_dumps(result), end="")
    return 0


def _cmd_experiment(args) -> int:
    seed = _resolve_seed(args)
    series_by_meter, _ = _load_series(args)
    meters = read_meters_file(args.meters)
    config = ExperimentConfig(
        arch=args.arch,
        schemes=tuple(s.strip() for s in args.schemes.split(",")),
        train=_train_config(args, seed),
        holdout_fraction=args.holdout,
        folds=args.folds,
        attributes=_attributes(args),
        exclude_plateau_negatives=args.exclude_plateau_negatives,
        threads=args.threads,
        seed=seed,
    )
    report = run_experiment(series_by_meter, meters, config)
    out = _out_dir(args)
    report_path = out / "report.json"
    table_path = out / "report.txt"
    report_path.write_text(_json_dumps(report.to_json()))
    table_path.write_text(report.to_table())
    _write_manifest(out, "experiment", config.to_json(), seed,
                    {"readings": Path(args.readings), "meters": Path(args.meters)},
                    [report_path, table_path])
    print(report.to_table(), end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meterdown",
        description="Water-meter failure prediction pipeline: synthetic fleets, "
                    "validity filtering, plateau windows, GRU classifiers, AUC experiments.")
    parser.add_argument("--version", action="version", version=f"meterdown {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    synth = subs.add_parser("synth", help="generate a synthetic fleet")
    synth.add_argument("--meters", type=int, default=None)
    synth.add_argument("--defective-fraction", type=float, default=None)
    synth.add_argument("--readings-min", type=int, default=None)
    synth.add_argument("--readings-max", type=int, default=None)
    synth.add_argument("--mode", choices=("noise", "informative"), default=None)
    synth.add_argument("--flip-prob", type=float, default=None)
    synth.add_argument("--benign-zero-rate", type=float, default=None)
    synth.add_argument("--noise-process", type=float, default=0.0)
    synth.add_argument("--noise-incongruent", type=float, default=0.0)
    synth.add_argument("--noise-gap", type=float, default=0.0)
    synth.add_argument("--config", default=None, help="fleet config JSON file")
    _add_common(synth, "output directory for readings.csv / meters.csv")
    synth.set_defaults(func=_cmd_synth)

    validate = subs.add_parser("validate", help="apply validity rules, emit a summary")
    _add_data_inputs(validate, meters=False)
    _add_common(validate, "output directory for summary.json")
    validate.set_defaults(func=_cmd_validate)

    label = subs.add_parser("label", help="build labeled windows for one scheme")
    _add_data_inputs(label)
    label.add_argument("--scheme", required=True, help="window scheme, e.g. 1p+2")
    label.add_argument("--exclude-plateau-negatives", action="store_true")
    _add_common(label, "output directory for windows.csv / counts.json")
    label.set_defaults(func=_cmd_label)

    def add_train_flags(sub):
        sub.add_argument("--arch", choices=("dnn1", "dnn2"), default="dnn1")
        sub.add_argument("--epochs", type=int, default=80)
        sub.add_argument("--batch-size", type=int, default=32)
        sub.add_argument("--learning-rate", type=float, default=0.001)
        sub.add_argument("--hidden", type=int, default=32)
        sub.add_argument("--attributes", default=None,
                         help="comma-separated categorical attributes for dnn2")
        sub.add_argument("--exclude-plateau-negatives", action="store_true")

    train_p = subs.add_parser("train", help="train one model, save a bundle")
    _add_data_inputs(train_p)
    train_p.add_argument("--scheme", required=True)
    add_train_flags(train_p)
    train_p.add_argument("--seed", type=int, default=None)
    train_p.add_argument("--out", required=True, help="bundle JSON path")
    train_p.set_defaults(func=_cmd_train)

    eval_p = subs.add_parser("eval", help="score a saved bundle on a fleet")
    eval_p.add_argument("--bundle", required=True)
    _add_data_inputs(eval_p)
    eval_p.add_argument("--scheme", required=True)
    _add_common(eval_p, "output directory for scores.csv / eval.json")
    eval_p.set_defaults(func=_cmd_eval)

    experiment = subs.add_parser("experiment", help="CV + holdout AUC report")
    _add_data_inputs(experiment)
    experiment.add_argument("--schemes", default="1p+1,1p+2,1p+3,1p+4",
                            help="comma-separated schemes")
    add_train_flags(experiment)
    experiment.add_argument("--folds", type=int, default=10)
    experiment.add_argument("--holdout", type=float, default=0.8)
    experiment.add_argument("--threads", type=int, default=1)
    _add_common(experiment, "output directory for report.json / report.txt")
    experiment.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: exit 2 on unknown flags, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except MeterdownError as err:
        sys.stderr.write(json.dumps(err.to_json(), sort_keys=True) + "\n")
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
