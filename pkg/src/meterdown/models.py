"""The two classifier architectures, their training loop, and bundle files.

dnn1 (continuous only):
    GRU(2 -> H) -> dense H -> 32 relu -> dense 32 -> 128 relu -> 1 sigmoid

dnn2 (continuous + categorical), two parallel branches merged by
concatenation (32 + 96 = 128):
    branch 1: GRU(2 -> H) -> dense H -> 32 relu
    branch 2: dense C -> 128 relu -> dense 128 -> 96 relu
    merged  : dense 128 -> 128 relu -> 1 sigmoid

Training is plain mini-batch Adam on binary cross-entropy for a fixed number
of epochs, shuffled per epoch from (seed, epoch) alone so identical seeds
give bit-identical trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from . import neural
from .errors import BundleError, ConfigError, DataError, ShapeError
from .features import CategoricalVocab, Scaler

ARCHS = ("dnn1", "dnn2")
BUNDLE_VERSION = 1
BUNDLE_KIND = "meterdown-model-bundle"


@dataclass
class TrainConfig:
    epochs: int = 80
    batch_size: int = 32
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    hidden: int = 32

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.hidden < 1:
            raise ConfigError(f"hidden must be >= 1, got {self.hidden}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class Model:
    arch: str
    input_dim: int
    hidden: int
    cat_dim: int
    params: dict[str, np.ndarray] = field(repr=False)

    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))


def _dense_shapes(arch: str, hidden: int, cat_dim: int) -> list[tuple[str, int, int]]:
    if arch == "dnn1":
        return [("dense_a", hidden, 32), ("dense_b", 32, 128), ("out", 128, 1)]
    return [("br1", hidden, 32), ("br2a", cat_dim, 128), ("br2b", 128, 96),
            ("head", 128, 128), ("out", 128, 1)]


def init_model(arch: str, input_dim: int = 2, hidden: int = 32,
               cat_dim: int = 0, seed: int = 0) -> Model:
    """Seeded, reproducible parameter initialization for either architecture."""
    if arch not in ARCHS:
        raise ConfigError(f"arch must be one of {ARCHS}, got {arch!r}")
    if arch == "dnn2" and cat_dim < 1:
        raise ConfigError("dnn2 needs a categorical input dimension >= 1")
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for key, value in neural.init_gru_params(rng, input_dim, hidden).items():
        params["gru_" + key] = value
    for name, n_in, n_out in _dense_shapes(arch, hidden, cat_dim):
        params[name + "_w"] = neural.glorot_uniform(rng, n_in, n_out, (n_in, n_out))
        params[name + "_b"] = np.zeros(n_out)
    return Model(arch=arch, input_dim=input_dim, hidden=hidden,
                 cat_dim=cat_dim if arch == "dnn2" else 0, params=params)


def _gru_view(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k[len("gru_"):]: v for k, v in params.items() if k.startswith("gru_")}


def forward(model: Model, x_seq: np.ndarray,
            x_cat: Optional[np.ndarray] = None) -> tuple[np.ndarray, dict]:
    """Probability in (0, 1) per example, plus a cache for backward().

    x_seq is (T, B, input_dim); dnn2 additionally requires x_cat of shape
    (B, cat_dim).
    """
    p = model.params
    batch = x_seq.shape[1] if x_seq.ndim == 3 else -1
    h0 = np.zeros((batch, model.hidden))
    h, gru_cache = neural.gru_forward(_gru_view(p), x_seq, h0)
    cache: dict = {"arch": model.arch, "gru": gru_cache}
    if model.arch == "dnn1":
        a, cache["dense_a"] = neural.dense_forward(p["dense_a_w"], p["dense_a_b"], h, "relu")
        b, cache["dense_b"] = neural.dense_forward(p["dense_b_w"], p["dense_b_b"], a, "relu")
        logit, cache["out"] = neural.dense_forward(p["out_w"], p["out_b"], b, "identity")
    else:
        if x_cat is None:
            raise ShapeError("dnn2 requires a categorical input")
        if x_cat.ndim != 2 or x_cat.shape != (batch, model.cat_dim):
            raise ShapeError(
                f"categorical input shape {x_cat.shape}, expected {(batch, model.cat_dim)}")
        b1, cache["br1"] = neural.dense_forward(p["br1_w"], p["br1_b"], h, "relu")
        c1, cache["br2a"] = neural.dense_forward(p["br2a_w"], p["br2a_b"], x_cat, "relu")
        c2, cache["br2b"] = neural.dense_forward(p["br2b_w"], p["br2b_b"], c1, "relu")
        merged = np.concatenate([b1, c2], axis=1)
        hd, cache["head"] = neural.dense_forward(p["head_w"], p["head_b"], merged, "relu")
        logit, cache["out"] = neural.dense_forward(p["out_w"], p["out_b"], hd, "identity")
    prob = neural.sigmoid(logit[:, 0])
    cache["prob"] = prob
    return prob, cache


def backward(model: Model, cache: dict, dlogit: np.ndarray) -> dict[str, np.ndarray]:
    """Exact parameter gradients given d loss / d logit, shape (B,)."""
    if cache.get("arch") != model.arch:
        raise ShapeError("cache does not belong to this architecture")
    grads: dict[str, np.ndarray] = {}
    dy = dlogit[:, None]
    if model.arch == "dnn1":
        grads["out_w"], grads["out_b"], db = neural.dense_backward(cache["out"], dy)
        grads["dense_b_w"], grads["dense_b_b"], da = neural.dense_backward(cache["dense_b"], db)
        grads["dense_a_w"], grads["dense_a_b"], dh = neural.dense_backward(cache["dense_a"], da)
    else:
        grads["out_w"], grads["out_b"], dhd = neural.dense_backward(cache["out"], dy)
        grads["head_w"], grads["head_b"], dmerged = neural.dense_backward(cache["head"], dhd)
        db1 = dmerged[:, :32]
        dc2 = dmerged[:, 32:]
        grads["br2b_w"], grads["br2b_b"], dc1 = neural.dense_backward(cache["br2b"], dc2)
        grads["br2a_w"], grads["br2a_b"], _ = neural.dense_backward(cache["br2a"], dc1)
        grads["br1_w"], grads["br1_b"], dh = neural.dense_backward(cache["br1"], db1)
    gru_grads, _, _ = neural.gru_backward(cache["gru"], dh)
    for key, value in gru_grads.items():
        grads["gru_" + key] = value
    return grads


def loss_and_grads(model: Model, x_seq: np.ndarray, x_cat: Optional[np.ndarray],
                   y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean binary cross-entropy over the batch and its parameter gradients."""
    prob, cache = forward(model, x_seq, x_cat)
    losses, dlogit = neural.bce_loss(prob, y)
    grads = backward(model, cache, dlogit / len(y))
    return float(losses.mean()), grads


def train(model: Model, x_seq: np.ndarray, x_cat: Optional[np.ndarray],
          y: np.ndarray, config: TrainConfig) -> list[float]:
    """Mini-batch Adam for config.epochs epochs; returns per-epoch mean loss.

    The shuffle for epoch e is a function of (config.seed, e) only, so the
    trajectory is bit-reproducible for identical inputs. The training set
    must contain both classes.
    """
    n = len(y)
    if n == 0:
        raise DataError("empty training set")
    if np.all(y == y[0]):
        raise DataError("training set contains a single class")
    state = neural.AdamState.create(model.params, alpha=config.learning_rate,
                                    beta1=config.beta1, beta2=config.beta2,
                                    eps=config.eps)
    history: list[float] = []
    for epoch in range(config.epochs):
        order = np.random.default_rng([config.seed, epoch]).permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = np.ascontiguousarray(x_seq[:, idx, :])
            cb = x_cat[idx] if x_cat is not None else None
            loss, grads = loss_and_grads(model, xb, cb, y[idx])
            neural.adam_step(model.params, grads, state)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)
    return history


def predict(model: Model, x_seq: np.ndarray,
            x_cat: Optional[np.ndarray] = None) -> np.ndarray:
    """Scores in (0, 1), one per example."""
    prob, _ = forward(model, x_seq, x_cat)
    return prob


# ---------------------------------------------------------------------------
# bundle persistence


@dataclass
class Bundle:
    model: Model
    scaler: Optional[Scaler]
    vocab: Optional[CategoricalVocab]


def save_bundle(path: str | Path, model: Model, scaler: Optional[Scaler] = None,
                vocab: Optional[CategoricalVocab] = None) -> None:
    """Write model + encoders as JSON; floats survive the round trip bit-exactly."""
    payload = {
        "kind": BUNDLE_KIND,
        "format_version": BUNDLE_VERSION,
        "arch": model.arch,
        "input_dim": model.input_dim,
        "hidden": model.hidden,
        "cat_dim": model.cat_dim,
        "params": {
            name: {"shape": list(p.shape), "data": p.ravel().tolist()}
            for name, p in model.params.items()
        },
        "scaler": scaler.to_json() if scaler is not None else None,
        "vocab": vocab.to_json() if vocab is not None else None,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def load_bundle(path: str | Path) -> Bundle:
    """Read a bundle back; corrupt files and unknown versions raise BundleError."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise BundleError(f"cannot read bundle {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("kind") != BUNDLE_KIND:
        raise BundleError(f"{path} is not a model bundle")
    if payload.get("format_version") != BUNDLE_VERSION:
        raise BundleError(
            f"bundle format version {payload.get('format_version')!r} "
            f"not supported (expected {BUNDLE_VERSION})",
            version=payload.get("format_version"),
        )
    try:
        arch = payload["arch"]
        params = {
            name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in payload["params"].items()
        }
        model = Model(arch=arch, input_dim=payload["input_dim"],
                      hidden=payload["hidden"], cat_dim=payload["cat_dim"],
                      params=params)
        scaler = Scaler.from_json(payload["scaler"]) if payload["scaler"] else None
        vocab = CategoricalVocab.from_json(payload["vocab"]) if payload["vocab"] else None
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"bundle {path} is corrupt: {exc}") from exc

    try:
        reference = init_model(arch, input_dim=model.input_dim,
                               hidden=model.hidden, cat_dim=model.cat_dim)
    except ConfigError as exc:
        raise BundleError(f"bundle {path} declares invalid dims: {exc}") from exc
    mismatch = set(reference.params) != set(model.params) or any(
        reference.params[k].shape != model.params[k].shape for k in reference.params)
    if mismatch:
        raise BundleError(f"bundle {path} parameter blocks do not match arch {arch}")
    return Bundle(model=model, scaler=scaler, vocab=vocab)
