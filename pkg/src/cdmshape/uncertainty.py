"""Monte Carlo dropout prediction: mean shape, per-output spread, intervals.

Running the network K times with independently sampled dropout masks
approximates sampling from the weight posterior; the spread of the K outputs
is the model (epistemic) uncertainty.  The K-sample variance is the
population form (divide by K).  Confidence intervals are omega times the
standard deviation, in mm, matching how the uncertainty is compared against
mm-valued error thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import MlpModel, forward


@dataclass
class McPrediction:
    mean: np.ndarray       # (60,) mm
    variance: np.ndarray   # (60,) mm^2, population variance of the K samples
    std: np.ndarray        # (60,) mm
    n_samples: int
    omega: float = 3.0


def mc_statistics(samples) -> tuple[np.ndarray, np.ndarray]:
    """Mean and population variance over the first axis of a (K, D) array."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    mean = samples.mean(axis=0)
    dev = samples - mean
    return mean, np.mean(dev * dev, axis=0)


def mc_predict(model: MlpModel, features, k: int = 100, seed: int = 0,
               omega: float = 3.0) -> McPrediction:
    """K dropout-sampled forward passes from raw features, reduced to statistics.

    Deterministic for a given seed: the K mask sets are drawn from one seeded
    stream in a fixed order.  With dropout rate 0 all samples coincide and
    the variance is exactly zero.
    """
    if k < 1:
        raise ValueError("need at least one Monte Carlo sample")
    if model.normalizer is None:
        raise ValueError("model has no fitted normalizer")
    x = model.normalizer.transform(np.asarray(features, dtype=float))
    if x.ndim != 1:
        raise ValueError("mc_predict takes a single feature row")
    if model.dropout_rate == 0.0:
        # All samples coincide; skip the batch so the variance is exactly zero.
        mean = forward(model, x)
        return McPrediction(mean=mean, variance=np.zeros_like(mean),
                            std=np.zeros_like(mean), n_samples=k, omega=omega)
    rng = np.random.default_rng(seed)
    outputs = forward(model, np.tile(x, (k, 1)), rng=rng)
    mean, variance = mc_statistics(outputs)
    return McPrediction(mean=mean, variance=variance, std=np.sqrt(variance),
                        n_samples=k, omega=omega)


def confidence_interval(pred: McPrediction, omega: float | None = None) -> np.ndarray:
    """Per-output interval half-width omega * std (mm)."""
    if omega is None:
        omega = pred.omega
    if omega <= 0:
        raise ValueError("omega must be positive")
    return omega * pred.std
