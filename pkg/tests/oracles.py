"""Independent reference implementations the tests check the library against.

Everything here is deliberately written the dumb way (double loops, scalar
math, naive scans) and stays independent of the code paths it verifies.
"""

from __future__ import annotations

import math

import numpy as np

from meterdown import models, neural


def pairwise_auc(scores, labels) -> float:
    """Brute-force Mann-Whitney AUC: loop over every positive x negative pair."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def cut_scan_segments(readings, gap_limit_days):
    """One-pass cut scan over a sorted reading list: dedup same-day (last wins),
    then start a new segment at every gap > limit. Returns lists of (ts, value)."""
    dedup = {}
    for r in readings:
        dedup[r.timestamp] = r.value  # later entries overwrite
    points = sorted(dedup.items())
    if not points:
        return []
    segments = [[points[0]]]
    for prev, cur in zip(points, points[1:]):
        if (cur[0] - prev[0]).days > gap_limit_days:
            segments.append([])
        segments[-1].append(cur)
    return segments


def first_equal_run(values):
    """Naive scan for the first maximal run of >= 2 equal consecutive values."""
    n = len(values)
    for i in range(n - 1):
        if values[i] == values[i + 1]:
            j = i + 1
            while j + 1 < n and values[j + 1] == values[i]:
                j += 1
            return i, j - i + 1
    return None


def enumerate_windows(series_by_meter, meters, p, k, exclude_plateau_negatives=False):
    """Re-derive every window from scratch; returns (positives, negatives) as
    {meter_id: window tuple} maps."""
    length = p + k
    positives = {}
    negatives = {}
    for meter_id, record in meters.items():
        segments = list(series_by_meter.get(meter_id, []))
        if record.defective:
            for s in segments:
                run = first_equal_run(s.values)
                if run is None:
                    continue
                start, run_len = run
                if start >= k and run_len >= p:
                    positives[meter_id] = tuple(s.points[start - k:start + p])
                    break
        else:
            eligible = [
                (i, s) for i, s in enumerate(segments)
                if len(s) >= length and not (
                    exclude_plateau_negatives and first_equal_run(s.values) is not None)
            ]
            if not eligible:
                continue
            best = max(eligible, key=lambda item: (len(item[1]), item[0]))[1]
            negatives[meter_id] = tuple(best.points[-length:])
    return positives, negatives


def scalar_gru(params, x_seq, h0):
    """Pure-Python per-element evaluation of the GRU recurrence."""
    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    T, B, D = len(x_seq), len(x_seq[0]), len(x_seq[0][0])
    H = len(params["bz"])
    h = [[float(h0[b][j]) for j in range(H)] for b in range(B)]
    for t in range(T):
        new_h = [[0.0] * H for _ in range(B)]
        for b in range(B):
            x = x_seq[t][b]
            z, r = [0.0] * H, [0.0] * H
            for j in range(H):
                az = sum(x[d] * params["wz"][d][j] for d in range(D)) + \
                    sum(h[b][i] * params["uz"][i][j] for i in range(H)) + params["bz"][j]
                ar = sum(x[d] * params["wr"][d][j] for d in range(D)) + \
                    sum(h[b][i] * params["ur"][i][j] for i in range(H)) + params["br"][j]
                z[j], r[j] = sig(az), sig(ar)
            for j in range(H):
                ac = sum(x[d] * params["wh"][d][j] for d in range(D)) + \
                    sum(r[i] * h[b][i] * params["uh"][i][j] for i in range(H)) + params["bh"][j]
                c = math.tanh(ac)
                new_h[b][j] = z[j] * h[b][j] + (1.0 - z[j]) * c
        h = new_h
    return np.array(h)


def scalar_adam(grad_fn, theta, steps, alpha=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
    """Reference scalar Adam trajectory for a 1-parameter objective."""
    m = v = 0.0
    history = [theta]
    for t in range(1, steps + 1):
        g = grad_fn(theta)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        theta = theta - alpha * m_hat / (math.sqrt(v_hat) + eps)
        history.append(theta)
    return history


def plugin_mi(xs, ys) -> float:
    """Plug-in mutual information estimate in nats between two discrete sequences."""
    n = len(xs)
    joint: dict = {}
    px: dict = {}
    py: dict = {}
    for x, y in zip(xs, ys):
        joint[(x, y)] = joint.get((x, y), 0) + 1
        px[x] = px.get(x, 0) + 1
        py[y] = py.get(y, 0) + 1
    mi = 0.0
    for (x, y), c in joint.items():
        pxy = c / n
        mi += pxy * math.log(pxy / ((px[x] / n) * (py[y] / n)))
    return mi


# ---------------------------------------------------------------------------
# finite-difference gradient checking


def _relu_masks(cache) -> tuple:
    masks = []
    for value in cache.values():
        if isinstance(value, dict) and value.get("activation") == "relu":
            masks.append(value["s"] > 0)
    return tuple(masks)


def _loss_and_masks(model, x_seq, x_cat, y):
    prob, cache = models.forward(model, x_seq, x_cat)
    losses, _ = neural.bce_loss(prob, y)
    return float(losses.mean()), _relu_masks(cache)


def fd_gradcheck(model, x_seq, x_cat, y, step=1e-5):
    """Central finite differences over every parameter coordinate.

    Coordinates whose +/-step perturbation flips any relu activation state are
    kink-crossers and get excluded (their FD quotient is meaningless).
    Returns (max relative error over checked coords, n checked, n skipped).
    """
    _, grads = models.loss_and_grads(model, x_seq, x_cat, y)
    max_rel = 0.0
    checked = skipped = 0
    for name, param in model.params.items():
        flat = param.ravel()
        gflat = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            loss_plus, masks_plus = _loss_and_masks(model, x_seq, x_cat, y)
            flat[i] = orig - step
            loss_minus, masks_minus = _loss_and_masks(model, x_seq, x_cat, y)
            flat[i] = orig
            if any(not np.array_equal(a, b) for a, b in zip(masks_plus, masks_minus)):
                skipped += 1
                continue
            fd = (loss_plus - loss_minus) / (2.0 * step)
            denom = max(abs(fd), abs(gflat[i]), 1e-8)
            max_rel = max(max_rel, abs(fd - gflat[i]) / denom)
            checked += 1
    return max_rel, checked, skipped
