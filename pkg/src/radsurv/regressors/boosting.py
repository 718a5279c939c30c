"""Least-squares gradient boosting over regression trees.

The model starts from the training-target mean; each stage fits a CART
tree to the current residuals and the prediction accrues
``init + learning_rate * sum(tree_k(x))`` in stage order, an exact identity
(``staged_predict`` exposes every prefix). With subsample < 1 each stage
sees a without-replacement row sample drawn from the (seed, stage) stream;
residuals still update on all rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..rng import make_rng
from .tree import TreeNode, build_tree, predict_tree


@dataclass
class BoostModel:
    init_value: float
    learning_rate: float
    trees: list[TreeNode]
    subsample: float
    seed: int
    params: dict
    feature_names: list[str]
    imputation: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def train_gbr(X: np.ndarray, y: np.ndarray, params: dict, seed: int,
              feature_names: Optional[list[str]] = None) -> BoostModel:
    """Fit a boosting ensemble.

    params: n_estimators (default 100), max_depth (default 3), min_split
    (default 2), learning_rate in (0, 1] (default 0.1), subsample in (0, 1]
    (default 1.0).
    """
    from . import prepare_training

    X, y, feature_names, imputation = prepare_training(X, y, feature_names)
    n = X.shape[0]
    if n < 2:
        raise ValueError("boosting needs at least 2 samples")
    n_estimators = int(params.get("n_estimators", 100))
    max_depth = params.get("max_depth", 3)
    min_split = int(params.get("min_split", 2))
    lr = float(params.get("learning_rate", 0.1))
    subsample = float(params.get("subsample", 1.0))
    if not 0.0 < lr <= 1.0:
        raise ValueError(f"learning_rate must be in (0, 1], got {lr}")
    if not 0.0 < subsample <= 1.0:
        raise ValueError(f"subsample must be in (0, 1], got {subsample}")

    init_value = float(y.mean())
    residual = y - init_value
    trees = []
    for k in range(n_estimators):
        if subsample < 1.0:
            rng = make_rng(seed, k)
            take = max(1, int(round(subsample * n)))
            rows = np.sort(rng.choice(n, size=take, replace=False))
        else:
            rows = np.arange(n)
        tree = build_tree(X[rows], residual[rows], max_depth, min_split,
                          None, None)
        residual = residual - lr * predict_tree(tree, X)
        trees.append(tree)
    return BoostModel(init_value=init_value, learning_rate=lr, trees=trees,
                      subsample=subsample, seed=seed, params=dict(params),
                      feature_names=feature_names, imputation=imputation)


def predict_gbr(model: BoostModel, X: np.ndarray) -> np.ndarray:
    acc = np.full(X.shape[0], model.init_value, dtype=np.float64)
    for tree in model.trees:
        acc += model.learning_rate * predict_tree(tree, X)
    return acc


def staged_predict(model: BoostModel, X: np.ndarray) -> list[np.ndarray]:
    """Predictions after 0, 1, ..., n_estimators stages (exact prefixes)."""
    acc = np.full(X.shape[0], model.init_value, dtype=np.float64)
    stages = [acc.copy()]
    for tree in model.trees:
        acc += model.learning_rate * predict_tree(tree, X)
        stages.append(acc.copy())
    return stages
