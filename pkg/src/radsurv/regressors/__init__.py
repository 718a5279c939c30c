"""The four predictor families plus grid search and model persistence.

Missing feature values (NaN, e.g. an absent necrosis centroid) are imputed
at training time with the per-feature training median; the imputation
vector is stored on every model and re-applied at prediction, so trained
models never see NaN. A column that is entirely missing imputes to 0.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .linear import LinearModel, SingularSystemError, train_linear, predict_linear
from .tree import ForestModel, TreeNode, train_forest, predict_forest
from .boosting import BoostModel, train_gbr, predict_gbr, staged_predict
from .mlp import MlpModel, MlpDivergenceError, train_mlp, predict_mlp
from .gridsearch import GridSearchReport, grid_search_cv
from .persist import save_model, load_model

__all__ = [
    "LinearModel", "ForestModel", "BoostModel", "MlpModel", "TreeNode",
    "SingularSystemError", "MlpDivergenceError", "GridSearchReport",
    "train_linear", "train_forest", "train_gbr", "train_mlp", "train_model",
    "predict", "staged_predict", "grid_search_cv", "save_model", "load_model",
    "prepare_training", "impute", "PREDICTOR_KINDS", "model_kind",
]

PREDICTOR_KINDS = ("linear", "rfr", "gbr", "mlp")

AnyModel = Union[LinearModel, ForestModel, BoostModel, MlpModel]


def prepare_training(X: np.ndarray, y: np.ndarray,
                     feature_names: Optional[list[str]]):
    """Validate shapes, impute missing values, default the feature names."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y shape {y.shape} does not match X rows {X.shape[0]}")
    if np.isnan(y).any():
        raise ValueError("training targets contain NaN")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(X.shape[1])]
    elif len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match X columns")

    imputation = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        col = X[:, j]
        good = ~np.isnan(col)
        imputation[j] = float(np.median(col[good])) if good.any() else 0.0
    X = impute(X, imputation)
    return X, y, list(feature_names), imputation


def impute(X: np.ndarray, imputation: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if np.isnan(X).any():
        X = X.copy()
        rows, cols = np.nonzero(np.isnan(X))
        X[rows, cols] = np.asarray(imputation)[cols]
    return X


def model_kind(model: AnyModel) -> str:
    if isinstance(model, LinearModel):
        return "linear"
    if isinstance(model, ForestModel):
        return "rfr"
    if isinstance(model, BoostModel):
        return "gbr"
    if isinstance(model, MlpModel):
        return "mlp"
    raise TypeError(f"unknown model type {type(model).__name__}")


def train_model(kind: str, X: np.ndarray, y: np.ndarray, params: dict,
                seed: int, feature_names: Optional[list[str]] = None) -> AnyModel:
    """Uniform training entry point over the four predictor kinds."""
    if kind == "linear":
        return train_linear(X, y,
                            penalty=params.get("penalty", "none"),
                            lam=float(params.get("lam", 0.0)),
                            max_iter=int(params.get("max_iter", 10000)),
                            tol=float(params.get("tol", 1e-8)),
                            feature_names=feature_names)
    if kind == "rfr":
        return train_forest(X, y, params, seed, feature_names)
    if kind == "gbr":
        return train_gbr(X, y, params, seed, feature_names)
    if kind == "mlp":
        return train_mlp(X, y, params, seed, feature_names)
    raise ValueError(f"unknown predictor kind {kind!r}, expected {PREDICTOR_KINDS}")


def predict(model: AnyModel, X: np.ndarray) -> np.ndarray:
    """Predict survival days; feature order must match training order."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"X shape {X.shape} does not match the model's "
            f"{model.n_features} features")
    X = impute(X, model.imputation)
    if isinstance(model, LinearModel):
        return predict_linear(model, X)
    if isinstance(model, ForestModel):
        return predict_forest(model, X)
    if isinstance(model, BoostModel):
        return predict_gbr(model, X)
    if isinstance(model, MlpModel):
        return predict_mlp(model, X)
    raise TypeError(f"unknown model type {type(model).__name__}")
