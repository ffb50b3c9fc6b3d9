"""Minimal float64 neural kernel: dense layers, a GRU cell, binary
cross-entropy, and Adam, with exact hand-derived backpropagation.

Everything operates on plain numpy float64 arrays in row-major batch layout:
dense inputs are (batch, features), sequences are (time, batch, features).
Parameters live in flat name -> array dicts so the optimizer and the
serializer can treat them uniformly.

GRU gate convention (update gate carries the previous state):

    z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
    r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
    c_t = tanh(x_t Wh + (r_t * h_{t-1}) Uh + bh)
    h_t = z_t * h_{t-1} + (1 - z_t) * c_t

Some frameworks swap z and 1-z; this module pins the original form, which is
what the analytic unit values in the tests assume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, ShapeError

ACTIVATIONS = ("relu", "sigmoid", "identity")

_GATE_KEYS = ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# ---------------------------------------------------------------------------
# dense layer


def dense_forward(w: np.ndarray, b: np.ndarray, x: np.ndarray,
                  activation: str) -> tuple[np.ndarray, dict]:
    """y = act(x w + b) for a batch x of shape (B, in); w is (in, out).

    Returns the output and a cache sufficient for dense_backward.
    """
    if activation not in ACTIVATIONS:
        raise ShapeError(f"unknown activation {activation!r}")
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(
            f"dense shapes inconsistent: x{x.shape} w{w.shape} b{b.shape}")
    s = x @ w + b
    if activation == "relu":
        y = np.maximum(s, 0.0)
    elif activation == "sigmoid":
        y = sigmoid(s)
    else:
        y = s
    cache = {"x": x, "w": w, "s": s, "y": y, "activation": activation}
    return y, cache


def dense_backward(cache: dict, dy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients (dw, db, dx) of a dense_forward call; relu'(0) = 0."""
    if dy.shape != cache["y"].shape:
        raise ShapeError(f"upstream gradient shape {dy.shape} does not match output {cache['y'].shape}")
    activation = cache["activation"]
    if activation == "relu":
        ds = dy * (cache["s"] > 0)
    elif activation == "sigmoid":
        y = cache["y"]
        ds = dy * y * (1.0 - y)
    else:
        ds = dy
    dw = cache["x"].T @ ds
    db = ds.sum(axis=0)
    dx = ds @ cache["w"].T
    return dw, db, dx


# ---------------------------------------------------------------------------
# GRU cell unrolled over a sequence


def init_gru_params(rng: np.random.Generator, input_dim: int,
                    hidden: int) -> dict[str, np.ndarray]:
    """Glorot-uniform gate weights, zero biases, in a fixed draw order."""
    params: dict[str, np.ndarray] = {}
    for gate in ("z", "r", "h"):
        params["w" + gate] = glorot_uniform(rng, input_dim, hidden, (input_dim, hidden))
        params["u" + gate] = glorot_uniform(rng, hidden, hidden, (hidden, hidden))
        params["b" + gate] = np.zeros(hidden)
    return params


def gru_forward(params: dict[str, np.ndarray], x_seq: np.ndarray,
                h0: np.ndarray) -> tuple[np.ndarray, dict]:
    """Run the GRU over x_seq of shape (T, B, D); returns (h_T, cache)."""
    missing = [k for k in _GATE_KEYS if k not in params]
    if missing:
        raise ShapeError(f"gru params missing keys: {missing}")
    input_dim, hidden = params["wz"].shape
    if x_seq.ndim != 3 or x_seq.shape[2] != input_dim:
        raise ShapeError(f"x_seq shape {x_seq.shape} does not match input_dim {input_dim}")
    if x_seq.shape[0] < 1:
        raise ShapeError("x_seq must have at least one step")
    if h0.shape != (x_seq.shape[1], hidden):
        raise ShapeError(f"h0 shape {h0.shape}, expected {(x_seq.shape[1], hidden)}")

    h = h0
    steps = []
    for t in range(x_seq.shape[0]):
        x = x_seq[t]
        z = sigmoid(x @ params["wz"] + h @ params["uz"] + params["bz"])
        r = sigmoid(x @ params["wr"] + h @ params["ur"] + params["br"])
        c = np.tanh(x @ params["wh"] + (r * h) @ params["uh"] + params["bh"])
        h_new = z * h + (1.0 - z) * c
        steps.append({"x": x, "h_prev": h, "z": z, "r": r, "c": c})
        h = h_new
    cache = {"params": params, "steps": steps, "h_final": h, "shape": x_seq.shape}
    return h, cache


def gru_backward(cache: dict, d_h_final: np.ndarray
                 ) -> tuple[dict[str, np.ndarray], np.ndarray, np.ndarray]:
    """Backpropagation through time for gru_forward.

    Returns (parameter gradients keyed like params, d x_seq, d h0).
    """
    if "steps" not in cache or "params" not in cache:
        raise ShapeError("not a gru_forward cache")
    if d_h_final.shape != cache["h_final"].shape:
        raise ShapeError(
            f"gradient shape {d_h_final.shape} does not match cached h_T {cache['h_final'].shape}")
    params = cache["params"]
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    dx_seq = np.zeros(cache["shape"], dtype=np.float64)

    dh = d_h_final
    for t in range(len(cache["steps"]) - 1, -1, -1):
        step = cache["steps"][t]
        x, h_prev, z, r, c = step["x"], step["h_prev"], step["z"], step["r"], step["c"]

        dz = dh * (h_prev - c)
        dc = dh * (1.0 - z)
        dh_prev = dh * z

        # candidate: c = tanh(x wh + (r*h_prev) uh + bh)
        da_c = dc * (1.0 - c * c)
        grads["wh"] += x.T @ da_c
        grads["uh"] += (r * h_prev).T @ da_c
        grads["bh"] += da_c.sum(axis=0)
        d_rh = da_c @ params["uh"].T
        dr = d_rh * h_prev
        dh_prev = dh_prev + d_rh * r

        # update gate: z = sigmoid(x wz + h_prev uz + bz)
        da_z = dz * z * (1.0 - z)
        grads["wz"] += x.T @ da_z
        grads["uz"] += h_prev.T @ da_z
        grads["bz"] += da_z.sum(axis=0)
        dh_prev = dh_prev + da_z @ params["uz"].T

        # reset gate: r = sigmoid(x wr + h_prev ur + br)
        da_r = dr * r * (1.0 - r)
        grads["wr"] += x.T @ da_r
        grads["ur"] += h_prev.T @ da_r
        grads["br"] += da_r.sum(axis=0)
        dh_prev = dh_prev + da_r @ params["ur"].T

        dx_seq[t] = da_c @ params["wh"].T + da_z @ params["wz"].T + da_r @ params["wr"].T
        dh = dh_prev

    return grads, dx_seq, dh


# ---------------------------------------------------------------------------
# loss


def bce_loss(p: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-example binary cross-entropy and its gradient wrt the logit.

    p must come from a sigmoid over a logit; it is clamped to
    [1e-12, 1 - 1e-12] inside the logs, and the logit gradient is the exact
    p - y.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError("labels must be 0 or 1")
    pc = np.clip(p, 1e-12, 1.0 - 1e-12)
    loss = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    dlogit = p - y
    return loss, dlogit


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators plus the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def create(cls, params: dict[str, np.ndarray], alpha: float = 0.001,
               beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m={k: np.zeros_like(p) for k, p in params.items()},
                   v={k: np.zeros_like(p) for k, p in params.items()},
                   t=0, alpha=alpha, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> tuple[dict[str, np.ndarray], AdamState]:
    """One Adam update, in place:

        m <- b1 m + (1-b1) g;   v <- b2 v + (1-b2) g^2
        theta <- theta - alpha * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {name!r} {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise DataError(f"non-finite gradient in parameter block {name!r}", parameter=name)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        theta -= state.alpha * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
