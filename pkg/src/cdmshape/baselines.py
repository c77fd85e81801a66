"""Linear and second-order polynomial regression baselines.

Both are exact least-squares fits via the normal equations with a tiny ridge
term for conditioning.  The polynomial map uses the full second-order basis
(linear, squares, and pairwise products) since the wavelength features
interact through the shared bending shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEATURE_MAPS = ("identity", "poly2")
_PAIR_I, _PAIR_J = np.triu_indices(8, k=1)


def feature_arity(feature_map: str, n_in: int = 8) -> int:
    if feature_map == "identity":
        return n_in
    if feature_map == "poly2":
        return n_in + n_in + (n_in * (n_in - 1)) // 2
    raise ValueError(f"unknown feature map {feature_map!r}")


def polynomial_features(x) -> np.ndarray:
    """Second-order basis of an 8-vector: [x_i] + [x_i^2] + [x_i*x_j for i<j].

    44 terms; the bias is handled by the model intercept.  Pair terms are in
    row-major upper-triangle order: (0,1), (0,2), ..., (6,7).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 8:
        raise ValueError(f"expected 8 features, got shape {x.shape}")
    return np.concatenate([x, x * x, x[..., _PAIR_I] * x[..., _PAIR_J]], axis=-1)


def _apply_map(x, feature_map: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 8:
        raise ValueError(f"expected 8 features, got shape {x.shape}")
    return x if feature_map == "identity" else polynomial_features(x)


@dataclass
class LinearModel:
    coef: np.ndarray        # (arity, 60)
    intercept: np.ndarray   # (60,)
    feature_map: str = "identity"
    residual: float | None = None  # RMS training residual reported by fit


def fit(features, targets, feature_map: str = "identity",
        ridge: float = 1e-10) -> LinearModel:
    """Least-squares fit of targets on the mapped features plus an intercept.

    Solves the normal equations on column-equilibrated features (each design
    column scaled to unit norm, undone afterwards) with ridge ``lambda`` on
    the scaled diagonal.  Equilibration leaves the least-squares problem
    unchanged but keeps the Gram matrix factorizable even when the features
    are exactly collinear, as the mode-corrected shift pairs are; the ridge
    then pins the solution and its bias stays far below test tolerances.
    """
    if feature_map not in FEATURE_MAPS:
        raise ValueError(f"unknown feature map {feature_map!r}")
    phi = _apply_map(features, feature_map)
    y = np.asarray(targets, dtype=float)
    if phi.ndim != 2 or y.ndim != 2 or phi.shape[0] != y.shape[0]:
        raise ValueError("features and targets must be matching 2-D arrays")
    if phi.shape[0] < phi.shape[1] + 1:
        raise ValueError(f"need at least {phi.shape[1] + 1} rows, got {phi.shape[0]}")

    a = np.concatenate([phi, np.ones((phi.shape[0], 1))], axis=1)
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0.0] = 1.0
    a_s = a / scale
    gram = a_s.T @ a_s + ridge * np.eye(a.shape[1])
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise ValueError("rank-deficient design beyond ridge rescue; "
                         f"condition estimate {np.linalg.cond(gram):.3e}") from None
    theta = np.linalg.solve(chol.T, np.linalg.solve(chol, a_s.T @ y))
    theta /= scale[:, None]
    if not np.all(np.isfinite(theta)):
        raise ValueError("normal-equation solve produced non-finite coefficients; "
                         f"condition estimate {np.linalg.cond(gram):.3e}")
    residual = float(np.sqrt(np.mean((a @ theta - y) ** 2)))
    return LinearModel(coef=theta[:-1], intercept=theta[-1], feature_map=feature_map,
                       residual=residual)


def predict(model: LinearModel, features) -> np.ndarray:
    """Model output W phi(x) + b for one row or a batch."""
    phi = _apply_map(features, model.feature_map)
    if phi.shape[-1] != model.coef.shape[0]:
        raise ValueError(f"feature arity {phi.shape[-1]} does not match "
                         f"model ({model.coef.shape[0]})")
    return phi @ model.coef + model.intercept
