"""Linear regression with optional ridge (l2) or lasso (l1) penalties.

Training standardizes features internally (the stored per-feature mean and
scale); penalties act on the standardized coefficients, with the intercept
never penalized. The solver is exact normal equations for none/l2 (the l2
penalty adds lambda * I to the standardized normal matrix) and cyclic
coordinate descent with soft thresholding for l1, iterated to a 1e-8
max-update tolerance. The stored coefficients are back-transformed to
original units, so ``prediction = intercept + coef . x`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class SingularSystemError(ValueError):
    """Unpenalized least squares on a rank-deficient design."""


@dataclass
class LinearModel:
    coefficients: np.ndarray      # original units
    intercept: float
    penalty: str                  # none | l1 | l2
    lam: float
    x_mean: np.ndarray
    x_scale: np.ndarray           # internal standardization parameters
    params: dict
    feature_names: list[str]
    imputation: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _soft_threshold(value: float, lam: float) -> float:
    if value > lam:
        return value - lam
    if value < -lam:
        return value + lam
    return 0.0


def train_linear(X: np.ndarray, y: np.ndarray, penalty: str = "none",
                 lam: float = 0.0, max_iter: int = 10000, tol: float = 1e-8,
                 feature_names: Optional[list[str]] = None) -> LinearModel:
    """Fit a linear model; penalty is 'none', 'l1' or 'l2' with weight lam."""
    from . import prepare_training

    if penalty not in ("none", "l1", "l2"):
        raise ValueError(f"penalty must be none/l1/l2, got {penalty!r}")
    if penalty != "none" and lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")

    X, y, feature_names, imputation = prepare_training(X, y, feature_names)
    n, p = X.shape
    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    x_scale[x_scale == 0] = 1.0     # constant columns get coefficient 0
    z = (X - x_mean) / x_scale
    y_mean = float(y.mean())
    yc = y - y_mean

    if penalty == "none":
        if np.linalg.matrix_rank(z) < p:
            raise SingularSystemError(
                "design matrix is rank deficient; an l2 penalty would "
                "regularize the solve")
        beta, *_ = np.linalg.lstsq(z, yc, rcond=None)
    elif penalty == "l2":
        beta = np.linalg.solve(z.T @ z + lam * np.eye(p), z.T @ yc)
    else:
        # coordinate descent on (1/2n)||yc - z b||^2 + lam * |b|_1
        beta = np.zeros(p)
        residual = yc.copy()
        col_sq = (z ** 2).sum(axis=0) / n
        for _ in range(max_iter):
            max_delta = 0.0
            for j in range(p):
                if col_sq[j] == 0:
                    continue
                rho = (z[:, j] @ residual) / n + col_sq[j] * beta[j]
                new = _soft_threshold(rho, lam) / col_sq[j]
                delta = new - beta[j]
                if delta != 0.0:
                    residual -= delta * z[:, j]
                    beta[j] = new
                    max_delta = max(max_delta, abs(delta))
            if max_delta < tol:
                break

    coefficients = beta / x_scale
    intercept = y_mean - float(coefficients @ x_mean)
    return LinearModel(coefficients=coefficients, intercept=intercept,
                       penalty=penalty, lam=float(lam),
                       x_mean=x_mean, x_scale=x_scale,
                       params={"penalty": penalty, "lam": float(lam),
                               "max_iter": max_iter, "tol": tol},
                       feature_names=feature_names, imputation=imputation)


def predict_linear(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return model.intercept + X @ model.coefficients
