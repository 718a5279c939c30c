"""Survival binning, the five evaluation metrics and the experiment matrix.

Survival classes use 1 month = 30.4375 days (Julian year / 12), so the
default thresholds are t_lo = 304.375 and t_hi = 456.5625 days: short below
t_lo, long above t_hi, intermediate in between with both boundaries
inclusive. The convention is configurable and recorded in every metrics
file.

Metrics over paired (predicted, true) day vectors: class accuracy, mean
squared error, median squared error (mean of the two central values for
even n), the population standard deviation of the squared errors, and
Spearman's rank correlation with average ranks on ties.

Experiments train on every subject regardless of resection status and
evaluate on the GTR subset by default (an ``all`` filter mirrors the
training-side usage). Feature sets: the seven image features, the 107
radiomics features, the RFE top 20, and the shape set (mask amounts,
extent, WT and necrosis centroids, the 14 radiomics shape descriptors and
age). Runs are pure functions of (cohort, plan): artifacts rewrite
byte-identically under the same master seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cohort import Cohort
from .featselect import EstimatorSpec, FeatureRanking, rfe
from .imagefeat import IMAGE_FEATURE_NAMES, MASK_SUMMARY_NAMES
from .regressors import grid_search_cv, predict, save_model, train_model
from .util import fmt_float, write_csv

DAYS_PER_MONTH = 30.4375
DEFAULT_THRESHOLDS = (10 * DAYS_PER_MONTH, 15 * DAYS_PER_MONTH)

SURVIVAL_CLASSES = ("short", "intermediate", "long")

FEATURE_SETS = ("image7", "radiomics107", "rfe20", "shape")

METRICS_COLUMNS = ("dataset", "feature_set", "predictor", "accuracy", "mse",
                   "median_se", "std_se", "spearman_r", "n", "seed",
                   "thresholds")


class MetricsError(ValueError):
    pass


@dataclass
class Metrics:
    accuracy: float
    mse: float
    median_se: float
    std_se: float
    spearman_r: float
    n: int

    def row(self, dataset: str, feature_set: str, predictor: str, seed: int,
            thresholds) -> list:
        return [dataset, feature_set, predictor, self.accuracy, self.mse,
                self.median_se, self.std_se, self.spearman_r, self.n, seed,
                f"{fmt_float(thresholds[0])}:{fmt_float(thresholds[1])}"]


@dataclass(frozen=True)
class ExperimentPlan:
    feature_set: str
    predictor: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    grid: Optional[list[dict]] = None
    cv_folds: int = 3
    eval_filter: str = "GTR"            # "GTR" or "all"
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS
    rfe_estimator: EstimatorSpec = EstimatorSpec("rfr", {})
    rfe_step: int = 1

    def __post_init__(self):
        if self.feature_set not in FEATURE_SETS:
            raise ValueError(f"unknown feature_set {self.feature_set!r}")
        if self.predictor not in ("linear", "rfr", "gbr", "mlp"):
            raise ValueError(f"unknown predictor {self.predictor!r}")
        if self.eval_filter not in ("GTR", "all"):
            raise ValueError("eval_filter must be 'GTR' or 'all'")


def bin_survival(days: float, thresholds=DEFAULT_THRESHOLDS) -> str:
    """Class of a survival duration; boundary days are intermediate."""
    if days < 0:
        raise ValueError(f"survival days must be >= 0, got {days}")
    t_lo, t_hi = thresholds
    if days < t_lo:
        return "short"
    if days > t_hi:
        return "long"
    return "intermediate"


def average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the mean rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman's rank correlation: Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise MetricsError("spearman needs two equal-length vectors, n >= 2")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise MetricsError("spearman inputs must be finite")
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise MetricsError("undefined correlation: zero rank variance")
    return float((dx @ dy) / np.sqrt(vx * vy))


def evaluate(pred_days, true_days, thresholds=DEFAULT_THRESHOLDS) -> Metrics:
    """The five metrics over paired prediction/truth day vectors."""
    pred = np.asarray(pred_days, dtype=np.float64)
    true = np.asarray(true_days, dtype=np.float64)
    if pred.shape != true.shape or pred.ndim != 1 or pred.size < 2:
        raise MetricsError("evaluate needs two equal-length vectors, n >= 2")
    pred_cls = [bin_survival(max(d, 0.0), thresholds) for d in pred]
    true_cls = [bin_survival(d, thresholds) for d in true]
    correct = sum(p == t for p, t in zip(pred_cls, true_cls))
    se = (pred - true) ** 2
    return Metrics(
        accuracy=correct / pred.size,
        mse=float(se.mean()),
        median_se=float(np.median(se)),
        std_se=float(se.std()),
        spearman_r=spearman(pred, true),
        n=int(pred.size),
    )


def shape_feature_set() -> list[str]:
    """The shape experiment set: mask summary + 14 shape descriptors + age."""
    from .radiomics.shape import SHAPE_FEATURE_NAMES

    return list(MASK_SUMMARY_NAMES) + list(SHAPE_FEATURE_NAMES) + ["meta.age"]


def resolve_feature_set(name: str, cohort: Cohort, plan: ExperimentPlan,
                        precomputed_ranking: Optional[FeatureRanking] = None):
    """Feature names for a set; rfe20 also returns the ranking artifact.

    ``precomputed_ranking`` lets the matrix runner share one RFE pass across
    predictors; the ranking depends only on (cohort, rfe estimator, seed).
    """
    from .radiomics import RADIOMICS_FEATURE_NAMES

    if name == "image7":
        return list(IMAGE_FEATURE_NAMES), None
    if name == "radiomics107":
        return list(RADIOMICS_FEATURE_NAMES), None
    if name == "shape":
        return shape_feature_set(), None
    ranking = precomputed_ranking
    if ranking is None:
        ranking = rfe(cohort.select(list(RADIOMICS_FEATURE_NAMES)),
                      cohort.survival_days, list(RADIOMICS_FEATURE_NAMES),
                      plan.rfe_estimator, n_keep=20, step=plan.rfe_step,
                      seed=plan.seed)
    return list(ranking.kept), ranking


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    train_metrics: Metrics
    eval_metrics: Metrics
    feature_names: list[str]
    model: object
    ranking: Optional[FeatureRanking]
    grid_report: Optional[object]
    artifacts: dict[str, str]


def run_experiment(cohort: Cohort, plan: ExperimentPlan,
                   outdir: Optional[str] = None,
                   precomputed_ranking: Optional[FeatureRanking] = None
                   ) -> ExperimentResult:
    """Train one (feature set, predictor) cell and evaluate it."""
    names, ranking = resolve_feature_set(plan.feature_set, cohort, plan,
                                         precomputed_ranking)
    X = cohort.select(names)
    y = cohort.survival_days
    if np.isnan(y).any():
        raise MetricsError("cohort has subjects with unknown survival")

    grid_report = None
    if plan.grid:
        model, grid_report = grid_search_cv(plan.predictor, X, y, plan.grid,
                                            plan.cv_folds, plan.seed, names)
    else:
        model = train_model(plan.predictor, X, y, plan.params, plan.seed, names)

    train_metrics = evaluate(predict(model, X), y, plan.thresholds)

    if plan.eval_filter == "GTR":
        mask = cohort.resection_mask(("GTR",))
        if not mask.any():
            raise MetricsError("evaluation set is empty after GTR filtering")
        eval_cohort = cohort.subset(mask)
    else:
        eval_cohort = cohort
    eval_metrics = evaluate(predict(model, eval_cohort.select(names)),
                            eval_cohort.survival_days, plan.thresholds)

    artifacts: dict[str, str] = {}
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        model_path = os.path.join(outdir, "model.json")
        save_model(model, model_path)
        artifacts["model"] = model_path
        metrics_path = os.path.join(outdir, "metrics.csv")
        write_csv(metrics_path, METRICS_COLUMNS, [
            train_metrics.row("train", plan.feature_set, plan.predictor,
                              plan.seed, plan.thresholds),
            eval_metrics.row("eval", plan.feature_set, plan.predictor,
                             plan.seed, plan.thresholds),
        ])
        artifacts["metrics"] = metrics_path
        if ranking is not None:
            ranking_path = os.path.join(outdir, "ranking.csv")
            ranking.write_csv(ranking_path)
            artifacts["ranking"] = ranking_path
        if grid_report is not None:
            grid_path = os.path.join(outdir, "grid_report.json")
            with open(grid_path, "w", encoding="utf-8") as fh:
                json.dump(grid_report.as_dict(), fh, sort_keys=True, indent=1)
                fh.write("\n")
            artifacts["grid_report"] = grid_path

    return ExperimentResult(plan=plan, train_metrics=train_metrics,
                            eval_metrics=eval_metrics, feature_names=names,
                            model=model, ranking=ranking,
                            grid_report=grid_report, artifacts=artifacts)


def run_experiment_matrix(cohort: Cohort, feature_sets: list[str],
                          predictors: list[str], seed: int,
                          outdir: Optional[str] = None,
                          base_plan: Optional[dict] = None):
    """Run every (feature set, predictor) cell; one metrics row per dataset.

    Returns (results, paths): per-cell results in row-major order plus the
    matrix-level metrics CSV paths (metrics_train.csv / metrics_eval.csv,
    one row per cell).
    """
    base = dict(base_plan or {})
    default_grids = base.get("grid") == "default"
    if default_grids:
        base.pop("grid")
    results = []
    train_rows = []
    eval_rows = []
    shared_ranking = None
    if "rfe20" in feature_sets:
        probe = ExperimentPlan(feature_set="rfe20",
                               predictor=predictors[0], seed=seed, **base)
        _, shared_ranking = resolve_feature_set("rfe20", cohort, probe)
    for fs in feature_sets:
        for pred in predictors:
            cell = dict(base)
            if default_grids:
                from .regressors.gridsearch import DEFAULT_GRIDS

                cell["grid"] = DEFAULT_GRIDS[pred]
            plan = ExperimentPlan(feature_set=fs, predictor=pred, seed=seed,
                                  **cell)
            cell_dir = os.path.join(outdir, f"{fs}__{pred}") if outdir else None
            result = run_experiment(cohort, plan, cell_dir,
                                    precomputed_ranking=shared_ranking
                                    if fs == "rfe20" else None)
            results.append(result)
            train_rows.append(result.train_metrics.row(
                "train", fs, pred, seed, plan.thresholds))
            eval_rows.append(result.eval_metrics.row(
                "eval", fs, pred, seed, plan.thresholds))
    paths = {}
    if outdir is not None:
        paths["metrics_train"] = os.path.join(outdir, "metrics_train.csv")
        paths["metrics_eval"] = os.path.join(outdir, "metrics_eval.csv")
        write_csv(paths["metrics_train"], METRICS_COLUMNS, train_rows)
        write_csv(paths["metrics_eval"], METRICS_COLUMNS, eval_rows)
    return results, paths
