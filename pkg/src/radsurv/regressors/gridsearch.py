"""Grid search with deterministic k-fold cross-validation.

Fold assignment is a seeded permutation split into k nearly equal parts.
Every grid combination is scored by the mean validation MSE over the folds
(population standard deviation reported alongside); the winner is the first
combination attaining the minimal mean, and it is retrained on all data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import make_rng

# Stock grids over the hyperparameters each family tunes. These are
# configuration defaults, deliberately small enough for desk-scale runs;
# pass an explicit grid for anything serious.
DEFAULT_GRIDS: dict[str, list[dict]] = {
    "rfr": [{"n_trees": n, "max_depth": d}
            for n in (25, 50, 100) for d in (4, 8, None)],
    "gbr": [{"n_estimators": n, "max_depth": d, "min_split": s,
             "learning_rate": lr}
            for n in (50, 100) for d in (2, 3) for s in (2, 8)
            for lr in (0.05, 0.1)],
    "linear": [{"penalty": "none"}]
    + [{"penalty": p, "lam": lam, "max_iter": 10000}
       for p in ("l1", "l2") for lam in (0.01, 0.1, 1.0, 10.0)],
    "mlp": [{"epochs": e, "lr": lr, "widths": w, "optimizer": opt}
            for e in (100, 300) for lr in (1e-3, 3e-3)
            for w in ((32, 24, 16, 12, 8), (64, 48, 32, 16, 8))
            for opt in ("adam", "sgd")],
}


@dataclass
class GridSearchReport:
    grid: list[dict]
    mean_mse: list[float]
    std_mse: list[float]
    best_index: int
    k: int
    seed: int
    errors: list = None   # per-combination failure message or None

    @property
    def best_params(self) -> dict:
        return self.grid[self.best_index]

    def as_dict(self) -> dict:
        return {"grid": self.grid, "mean_mse": self.mean_mse,
                "std_mse": self.std_mse, "best_index": self.best_index,
                "k": self.k, "seed": self.seed, "errors": self.errors}


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    perm = make_rng(seed, 0).permutation(n)
    return [fold for fold in np.array_split(perm, k)]


def grid_search_cv(kind: str, X: np.ndarray, y: np.ndarray, grid: list[dict],
                   k: int, seed: int, feature_names=None):
    """Returns (best model retrained on all data, GridSearchReport)."""
    from . import predict, train_model

    if not grid:
        raise ValueError("empty parameter grid")
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    n = X.shape[0]
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")

    folds = kfold_indices(n, k, seed)
    all_idx = np.arange(n)
    means = []
    stds = []
    errors = []
    for params in grid:
        fold_mse = []
        failure = None
        for fold in folds:
            train_idx = np.setdiff1d(all_idx, fold)
            try:
                model = train_model(kind, X[train_idx], y[train_idx], params,
                                    seed, feature_names)
            except Exception as exc:
                # an infeasible combination loses the search instead of
                # aborting it (e.g. an unpenalized solve on a singular fold)
                failure = str(exc)
                break
            err = predict(model, X[fold]) - y[fold]
            fold_mse.append(float(np.mean(err ** 2)))
        if failure is not None:
            means.append(np.inf)
            stds.append(np.inf)
            errors.append(failure)
        else:
            means.append(float(np.mean(fold_mse)))
            stds.append(float(np.std(fold_mse)))
            errors.append(None)

    if all(e is not None for e in errors):
        raise RuntimeError(f"every grid combination failed; last: {errors[-1]}")
    best = 0
    for i in range(1, len(grid)):
        if means[i] < means[best]:
            best = i
    report = GridSearchReport(grid=[dict(g) for g in grid], mean_mse=means,
                              std_mse=stds, best_index=best, k=k, seed=seed,
                              errors=errors)
    final = train_model(kind, X, y, grid[best], seed, feature_names)
    return final, report
