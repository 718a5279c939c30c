"""Feature importance and recursive feature elimination.

Importance sources: tree ensembles (forest, boosting) credit each feature
with its total impurity (variance) reduction summed over all split nodes,
normalized to sum 1 when any split exists; the linear model reports the
absolute standardized coefficients (|coef * scale|), also normalized. The
MLP has no defined importance and is rejected.

RFE repeatedly fits the estimator, scores the surviving features and drops
the ``step`` lowest-importance ones (never cutting below ``n_keep``) until
exactly ``n_keep`` remain. Equal importances eliminate in lexicographic
feature-name order, which makes every run a pure function of
(X, y, estimator spec, seed). Ranks are a permutation of 1..p: the features
eliminated first receive the worst (highest) ranks, batch-internal order
following elimination order, and the kept features receive ranks
1..n_keep by descending final importance (names break ties).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .regressors import (BoostModel, ForestModel, LinearModel, MlpModel,
                         train_model)
from .regressors.tree import tree_feature_gains
from .util import write_csv


class ImportanceError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorSpec:
    """Which predictor drives RFE, with its parameters."""

    kind: str = "rfr"           # linear | rfr | gbr
    params: dict = field(default_factory=dict)


@dataclass
class FeatureRanking:
    ranks: dict[str, int]               # 1 = kept longest
    kept: list[str]                     # size n_keep, canonical name order
    trace: list[tuple[str, int, float]]  # (feature, iteration, importance)
    estimator: str
    step: int
    seed: int

    def write_csv(self, path: str) -> None:
        eliminated_at = {name: it for name, it, _ in self.trace}
        rows = []
        for name in sorted(self.ranks, key=lambda n: self.ranks[n]):
            rows.append([name, self.ranks[name],
                         "true" if name in set(self.kept) else "false",
                         eliminated_at.get(name, "")])
        write_csv(path, ["feature", "rank", "kept", "eliminated_at_iteration"],
                  rows)


def importance(model) -> np.ndarray:
    """Per-feature non-negative importances; sums to 1 when any is positive."""
    if isinstance(model, MlpModel):
        raise ImportanceError("importance undefined for this predictor (mlp)")
    p = model.n_features
    if isinstance(model, (ForestModel, BoostModel)):
        gains = np.zeros(p)
        for tree in model.trees:
            gains += tree_feature_gains(tree, p)
        total = gains.sum()
        return gains / total if total > 0 else gains
    if isinstance(model, LinearModel):
        std_coef = np.abs(model.coefficients * model.x_scale)
        total = std_coef.sum()
        return std_coef / total if total > 0 else std_coef
    raise ImportanceError(f"importance undefined for {type(model).__name__}")


def rfe(X: np.ndarray, y: np.ndarray, feature_names: list[str],
        estimator: EstimatorSpec, n_keep: int, step: int = 1,
        seed: int = 0) -> FeatureRanking:
    """Recursive feature elimination down to exactly ``n_keep`` features."""
    p = len(feature_names)
    if X.shape[1] != p:
        raise ValueError("feature_names length does not match X columns")
    if not 1 <= n_keep <= p:
        raise ValueError(f"need 1 <= n_keep <= p, got n_keep={n_keep}, p={p}")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if estimator.kind == "mlp":
        raise ImportanceError("importance undefined for this predictor (mlp)")

    remaining = list(feature_names)
    col_index = {name: i for i, name in enumerate(feature_names)}
    trace: list[tuple[str, int, float]] = []
    iteration = 0
    final_importance: dict[str, float] = {}
    while True:
        iteration += 1
        cols = [col_index[name] for name in remaining]
        try:
            model = train_model(estimator.kind, X[:, cols], y,
                                dict(estimator.params), seed, list(remaining))
        except Exception as exc:
            raise RuntimeError(
                f"estimator failed at RFE iteration {iteration}: {exc}") from exc
        scores = importance(model)
        final_importance = dict(zip(remaining, scores.tolist()))
        if len(remaining) <= n_keep:
            break
        n_drop = min(step, len(remaining) - n_keep)
        order = sorted(remaining, key=lambda name: (final_importance[name], name))
        for name in order[:n_drop]:
            trace.append((name, iteration, final_importance[name]))
            remaining.remove(name)

    # ranks: eliminated features count down from p in elimination order;
    # kept features take 1..n_keep by descending final importance
    ranks: dict[str, int] = {}
    for pos, (name, _, _) in enumerate(trace):
        ranks[name] = p - pos
    kept_sorted = sorted(remaining,
                         key=lambda name: (-final_importance[name], name))
    for pos, name in enumerate(kept_sorted):
        ranks[name] = pos + 1
    kept = [name for name in feature_names if name in set(remaining)]
    return FeatureRanking(ranks=ranks, kept=kept, trace=trace,
                          estimator=estimator.kind, step=step, seed=seed)
