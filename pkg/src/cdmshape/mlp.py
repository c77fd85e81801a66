"""From-scratch fully connected network: 8 inputs -> 512 -> 256 -> 60 outputs.

ReLU hidden layers with inverted dropout (kept units scaled by 1/(1-d) at
sample time, so dropout-off inference needs no rescaling), a linear output
layer, mean-squared-error loss, manual backpropagation, and ADAM updates.
Everything is float64 numpy; all randomness flows through explicit seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Normalizer

DEFAULT_DIMS = (8, 512, 256, 60)


class TrainingDiverged(RuntimeError):
    """Training loss became non-finite."""


@dataclass
class MlpModel:
    """Layer parameters plus the input normalizer the network was trained with."""

    weights: list          # weights[l]: (n_in, n_out)
    biases: list           # biases[l]: (n_out,)
    dropout_rate: float = 0.3
    normalizer: Normalizer | None = None
    format_version: int = 1

    @property
    def dims(self) -> tuple:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    def predict(self, features) -> np.ndarray:
        """Deterministic (dropout-off) prediction from raw, unnormalized features."""
        if self.normalizer is None:
            raise ValueError("model has no fitted normalizer")
        return forward(self, self.normalizer.transform(features))


def init_mlp(dims=DEFAULT_DIMS, dropout_rate: float = 0.3, seed: int = 0,
             normalizer: Normalizer | None = None) -> MlpModel:
    """He-initialized network; biases start at zero."""
    if len(dims) < 2:
        raise ValueError("need at least input and output dims")
    if not 0.0 <= dropout_rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / n_in), size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return MlpModel(weights=weights, biases=biases, dropout_rate=dropout_rate,
                    normalizer=normalizer)


def _forward_cached(model: MlpModel, x: np.ndarray, rng):
    """Forward pass on a (B, n_in) batch, keeping activations for backprop.

    ``rng`` enables dropout sampling on the hidden layers; None runs the
    deterministic pass.  Returns (output, cache).
    """
    d = model.dropout_rate
    sample = rng is not None and d > 0.0
    keep = 1.0 - d
    act = x
    cache = []
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        pre = act @ w + b
        if l == last:
            cache.append((act, pre, None))
            act = pre
        else:
            hidden = np.maximum(pre, 0.0)
            if sample:
                mask = (rng.random(hidden.shape) >= d) / keep
                hidden = hidden * mask
            else:
                mask = None
            cache.append((act, pre, mask))
            act = hidden
    return act, cache


def forward(model: MlpModel, features, rng=None) -> np.ndarray:
    """Network output for normalized features; pass a Generator/seed to sample dropout."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.dims[0]:
        raise ValueError(f"expected {model.dims[0]} features, got {x.shape[1]}")
    gen = None if rng is None else np.random.default_rng(rng)
    out, _ = _forward_cached(model, x, gen)
    return out[0] if single else out


def loss_and_gradients(model: MlpModel, features, targets, rng=None):
    """Mean-squared-error loss and its gradients for one (already normalized) batch.

    The mean runs over batch rows and output units.  When ``rng`` is given,
    dropout masks are sampled and the gradients respect them.
    Returns (loss, (weight_grads, bias_grads)).
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y.shape[0]:
        raise ValueError("feature/target batch sizes differ")

    gen = None if rng is None else np.random.default_rng(rng)
    pred, cache = _forward_cached(model, x, gen)
    err = pred - y
    loss = float(np.mean(err * err))

    dout = 2.0 * err / err.size
    w_grads = [None] * len(model.weights)
    b_grads = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        inp, pre, mask = cache[l]
        w_grads[l] = inp.T @ dout
        b_grads[l] = dout.sum(axis=0)
        if l > 0:
            dhidden = dout @ model.weights[l].T
            _, pre_prev, mask_prev = cache[l - 1]
            if mask_prev is not None:
                dhidden = dhidden * mask_prev
            dout = dhidden * (pre_prev > 0.0)
    return loss, (w_grads, b_grads)


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter list."""

    m: list
    v: list
    step: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, alpha: float = 1e-3) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], alpha=alpha)


def adam_step(state: AdamState, params, grads):
    """One bias-corrected ADAM update, applied to ``params`` in place."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("parameter/gradient/state lengths differ")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def train(model: MlpModel, features, targets, epochs: int, batch_size: int = 256,
          seed: int = 0, val_fraction: float = 0.1, learning_rate: float = 1e-3):
    """Minibatch ADAM training on raw features/mm targets.

    Features are normalized through the model's normalizer (which must have
    been fitted on these training rows beforehand).  Shuffling and dropout
    sampling are driven by one seeded generator, so identical calls produce
    identical models and loss curves.

    Returns the loss curve as a list of (epoch, train_mse, val_mse) tuples;
    train_mse is the sample-weighted mean of the minibatch losses.
    """
    if model.normalizer is None:
        raise ValueError("fit a normalizer on the training features first")
    x = model.normalizer.transform(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise ValueError("feature/target row counts differ")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")

    rng = np.random.default_rng(seed)
    n = x.shape[0]
    n_val = int(val_fraction * n)
    order = rng.permutation(n)
    val_idx, train_idx = order[:n_val], order[n_val:]
    if train_idx.size == 0:
        raise ValueError("no training rows after validation split")
    xv, yv = x[val_idx], y[val_idx]
    xt, yt = x[train_idx], y[train_idx]

    params = model.weights + model.biases
    state = AdamState.for_params(params, alpha=learning_rate)
    curve = []
    for epoch in range(epochs):
        perm = rng.permutation(xt.shape[0])
        total, seen = 0.0, 0
        for start in range(0, xt.shape[0], batch_size):
            idx = perm[start:start + batch_size]
            loss, (wg, bg) = loss_and_gradients(model, xt[idx], yt[idx], rng=rng)
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, row offset {start}")
            adam_step(state, params, wg + bg)
            total += loss * idx.size
            seen += idx.size
        if xv.shape[0]:
            val_pred = forward(model, xv)
            val_mse = float(np.mean((val_pred - yv) ** 2))
        else:
            val_mse = math.nan
        curve.append((epoch, total / seen, val_mse))
    return curve


def _loss_and_pattern(model: MlpModel, x, y):
    """Deterministic loss plus the ReLU activation sign pattern."""
    out, cache = _forward_cached(model, x, None)
    err = out - y
    return float(np.mean(err * err)), [c[1] > 0.0 for c in cache[:-1]]


def gradient_check(dims=(8, 5, 4, 6), seed: int = 0, n_batches: int = 10,
                   batch_size: int = 4, fd_step: float = 1e-6) -> float:
    """Max relative deviation between analytic and central-difference gradients.

    Uses a random network (random nonzero biases, dropout off) on random
    batches; the deviation for parameter p is
    |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).  Parameters whose difference
    interval crosses a ReLU kink (the activation pattern differs between the
    two evaluation points) are skipped: the loss is non-differentiable there
    and a finite difference is meaningless.
    """
    rng = np.random.default_rng(seed)
    model = init_mlp(dims, dropout_rate=0.0, seed=seed)
    for b in model.biases:
        b[:] = rng.normal(0.0, 0.1, size=b.shape)
    params = model.weights + model.biases
    worst = 0.0
    for _ in range(n_batches):
        xb = rng.normal(size=(batch_size, dims[0]))
        # Targets near the outputs keep the loss small, so the roundoff in
        # the finite differences (proportional to the loss) stays below the
        # deviation tolerance for any seed.
        yb = forward(model, xb) + 0.01 * rng.normal(size=(batch_size, dims[-1]))
        _, (wg, bg) = loss_and_gradients(model, xb, yb)
        analytic = wg + bg
        for p, ga in zip(params, analytic):
            flat = p.ravel()
            ga_flat = ga.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + fd_step
                up, pat_up = _loss_and_pattern(model, xb, yb)
                flat[i] = orig - fd_step
                dn, pat_dn = _loss_and_pattern(model, xb, yb)
                flat[i] = orig
                if any(not np.array_equal(a, b) for a, b in zip(pat_up, pat_dn)):
                    continue
                g_fd = (up - dn) / (2.0 * fd_step)
                dev = abs(ga_flat[i] - g_fd) / max(1e-8, abs(ga_flat[i]) + abs(g_fd))
                worst = max(worst, dev)
    return worst
