"""CART regression trees and random forests, trained from scratch.

Split search minimizes the summed squared error of the children, scanning
all features at once with cumulative sums over per-feature sort orders.
Thresholds are midpoints between consecutive distinct sorted values, and
ties in gain resolve to the lowest feature index, then the lowest
threshold. Because the gain depends only on the target values and the sort
order (never on the feature magnitudes), a strictly increasing transform
of a feature column with all-distinct values leaves the fitted structure
and every training prediction bit-identical.

Forests average their trees in tree-index order (an exact identity, not an
approximation); each tree draws its bootstrap resample and per-node feature
subsets from a stream derived as (seed, tree_index), so training is
deterministic regardless of any parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..rng import make_rng


@dataclass
class TreeNode:
    n_samples: int
    value: float                      # mean of training targets reaching it
    feature: Optional[int] = None     # None marks a leaf
    threshold: float = 0.0
    gain: float = 0.0                 # SSE reduction achieved by the split
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    def to_dict(self) -> dict:
        if self.feature is None:
            return {"n": self.n_samples, "value": self.value}
        return {
            "n": self.n_samples, "value": self.value, "feature": self.feature,
            "threshold": self.threshold, "gain": self.gain,
            "left": self.left.to_dict(), "right": self.right.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "TreeNode":
        if "feature" not in d:
            return TreeNode(n_samples=d["n"], value=d["value"])
        return TreeNode(
            n_samples=d["n"], value=d["value"], feature=d["feature"],
            threshold=d["threshold"], gain=d["gain"],
            left=TreeNode.from_dict(d["left"]),
            right=TreeNode.from_dict(d["right"]),
        )


def _best_split(X: np.ndarray, y: np.ndarray, feat_idx: np.ndarray):
    """Best (feature, threshold, gain, left_row_mask) over the given features.

    Returns None when no feature admits a gain-positive split.
    """
    m = y.shape[0]
    xs_all = X[:, feat_idx]
    order = np.argsort(xs_all, axis=0, kind="stable")
    xs = np.take_along_axis(xs_all, order, axis=0)
    ys = y[order]

    s1 = np.cumsum(ys, axis=0)
    s2 = np.cumsum(ys * ys, axis=0)
    t1 = s1[-1, :]
    t2 = s2[-1, :]
    left_n = np.arange(1, m, dtype=np.float64)[:, None]
    right_n = m - left_n
    sse_left = s2[:-1] - s1[:-1] ** 2 / left_n
    sse_right = (t2 - s2[:-1]) - (t1 - s1[:-1]) ** 2 / right_n
    parent = t2 - t1 ** 2 / m
    gain = parent[None, :] - sse_left - sse_right
    gain[xs[1:] <= xs[:-1]] = -np.inf   # split must separate distinct values

    flat_best_rows = np.argmax(gain, axis=0)        # lowest threshold on ties
    best_gains = gain[flat_best_rows, np.arange(gain.shape[1])]
    col = int(np.argmax(best_gains))                # lowest feature on ties
    if not best_gains[col] > 0:
        return None
    row = int(flat_best_rows[col])
    feature = int(feat_idx[col])
    threshold = (xs[row, col] + xs[row + 1, col]) / 2.0
    left_mask = X[:, feature] <= threshold
    return feature, float(threshold), float(best_gains[col]), left_mask


def build_tree(X: np.ndarray, y: np.ndarray, max_depth: Optional[int],
               min_split: int, max_features: Optional[int],
               rng: Optional[np.random.Generator]) -> TreeNode:
    """Recursively grow a variance-reduction CART tree."""
    p = X.shape[1]

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        ysub = y[rows]
        node = TreeNode(n_samples=rows.size, value=float(ysub.mean()))
        if rows.size < min_split or (max_depth is not None and depth >= max_depth):
            return node
        sse = float(((ysub - node.value) ** 2).sum())
        if sse <= 0.0:
            return node
        if max_features is not None and max_features < p:
            feat_idx = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feat_idx = np.arange(p)
        found = _best_split(X[rows], ysub, feat_idx)
        if found is None:
            return node
        feature, threshold, gain, left_mask = found
        node.feature = feature
        node.threshold = threshold
        node.gain = gain
        node.left = grow(rows[left_mask], depth + 1)
        node.right = grow(rows[~left_mask], depth + 1)
        return node

    return grow(np.arange(X.shape[0]), 0)


def predict_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.feature is None:
            out[idx] = node.value
        else:
            go_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[go_left]))
            stack.append((node.right, idx[~go_left]))
    return out


def tree_feature_gains(root: TreeNode, p: int) -> np.ndarray:
    """Total SSE reduction credited to each feature across the tree."""
    gains = np.zeros(p, dtype=np.float64)
    stack = [root]
    while stack:
        node = stack.pop()
        if node.feature is not None:
            gains[node.feature] += node.gain
            stack.append(node.left)
            stack.append(node.right)
    return gains


@dataclass
class ForestModel:
    trees: list[TreeNode]
    bootstrap: bool
    max_features_rule: str            # "all" or "third" or an explicit count
    seed: int
    params: dict
    feature_names: list[str]
    imputation: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def resolve_max_features(rule, p: int) -> Optional[int]:
    """'all' -> every feature, 'third' -> ceil(p/3), int -> that many."""
    if rule == "all":
        return None
    if rule == "third":
        return max(1, math.ceil(p / 3))
    count = int(rule)
    if not 1 <= count <= p:
        raise ValueError(f"max_features {count} outside 1..{p}")
    return count


def train_forest(X: np.ndarray, y: np.ndarray, params: dict, seed: int,
                 feature_names: Optional[list[str]] = None) -> ForestModel:
    """Fit a random forest; see module docstring for the determinism contract.

    params: n_trees (default 50), max_depth (None = unlimited), min_split
    (default 2), max_features ('third' by default, 'all', or an int),
    bootstrap (default True).
    """
    from . import prepare_training   # shared imputation helper

    X, y, feature_names, imputation = prepare_training(X, y, feature_names)
    n, p = X.shape
    if n < 2:
        raise ValueError("forest training needs at least 2 samples")
    n_trees = int(params.get("n_trees", 50))
    max_depth = params.get("max_depth", None)
    min_split = int(params.get("min_split", 2))
    rule = params.get("max_features", "third")
    bootstrap = bool(params.get("bootstrap", True))
    mf = resolve_max_features(rule, p)

    trees = []
    for t in range(n_trees):
        rng = make_rng(seed, t)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(build_tree(X[rows], y[rows], max_depth, min_split, mf, rng))
    return ForestModel(trees=trees, bootstrap=bootstrap,
                       max_features_rule=str(rule), seed=seed,
                       params=dict(params), feature_names=feature_names,
                       imputation=imputation)


def predict_forest(model: ForestModel, X: np.ndarray) -> np.ndarray:
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        acc += predict_tree(tree, X)
    return acc / len(model.trees)
