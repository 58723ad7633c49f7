"""Nine classifier families behind one fit / predict_proba contract.

Every learner here is implemented in this package from primitives — the
point of the exercise is that each family's behaviour is inspectable —
while numpy carries the array arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import (
    AllCandidatesFailed,
    BadSpec,
    FeatureMismatch,
    NegativeFeature,
    SingleClass,
    WorkbenchError,
)
from ..preprocess import ProcessedDataset
from .bayes import (
    BernoulliNBModel,
    GaussianNBModel,
    MultinomialNBModel,
    fit_bernoulli_nb,
    fit_gaussian_nb,
    fit_multinomial_nb,
)
from .ensemble import BoostedTreesModel, RandomForestModel, fit_boosted_trees, fit_random_forest
from .linear import LinearSVCModel, LogisticModel, fit_linear_svc, fit_logistic
from .neighbors import KNearestModel, fit_knearest
from .tree import TreeNode, grow_tree, presort, tree_apply, tree_to_dot


class ModelKind(str, Enum):
    LOGISTIC_REGRESSION = "LogisticRegression"
    DECISION_TREE = "DecisionTree"
    RANDOM_FOREST = "RandomForest"
    GRADIENT_BOOSTED_TREES = "GradientBoostedTrees"
    GAUSSIAN_NB = "GaussianNB"
    MULTINOMIAL_NB = "MultinomialNB"
    BERNOULLI_NB = "BernoulliNB"
    K_NEAREST = "KNearest"
    LINEAR_SVC = "LinearSVC"


DISPLAY_NAMES: dict[ModelKind, str] = {
    ModelKind.LOGISTIC_REGRESSION: "LR",
    ModelKind.DECISION_TREE: "DecisionTree",
    ModelKind.RANDOM_FOREST: "RandomForest",
    ModelKind.GRADIENT_BOOSTED_TREES: "GBT",
    ModelKind.GAUSSIAN_NB: "GaussianNB",
    ModelKind.MULTINOMIAL_NB: "MultinomialNB",
    ModelKind.BERNOULLI_NB: "BernoulliNB",
    ModelKind.K_NEAREST: "KNeighbors",
    ModelKind.LINEAR_SVC: "SVC",
}

CLI_ALIASES: dict[str, ModelKind] = {
    "lr": ModelKind.LOGISTIC_REGRESSION,
    "tree": ModelKind.DECISION_TREE,
    "forest": ModelKind.RANDOM_FOREST,
    "gbt": ModelKind.GRADIENT_BOOSTED_TREES,
    "gnb": ModelKind.GAUSSIAN_NB,
    "mnb": ModelKind.MULTINOMIAL_NB,
    "bnb": ModelKind.BERNOULLI_NB,
    "knn": ModelKind.K_NEAREST,
    "svc": ModelKind.LINEAR_SVC,
}

DEFAULT_PARAMS: dict[ModelKind, dict[str, Any]] = {
    ModelKind.LOGISTIC_REGRESSION: {"l2_strength": 1.0, "max_iterations": 50, "tolerance": 1e-6},
    ModelKind.DECISION_TREE: {"max_depth": 5, "min_samples_leaf": 5},
    ModelKind.RANDOM_FOREST: {
        "n_trees": 15,
        "max_depth": 5,
        "feature_subsample_fraction": 0.5,
        "seed": 0,
        "bootstrap": True,
    },
    ModelKind.GRADIENT_BOOSTED_TREES: {
        "n_rounds": 20,
        "learning_rate": 0.3,
        "max_depth": 3,
        "l2_leaf_regularization": 1.0,
    },
    ModelKind.GAUSSIAN_NB: {"additive_smoothing": 1e-9},
    ModelKind.MULTINOMIAL_NB: {"additive_smoothing": 1.0},
    ModelKind.BERNOULLI_NB: {"additive_smoothing": 1.0},
    ModelKind.K_NEAREST: {"k": 7},
    ModelKind.LINEAR_SVC: {"hinge_regularization": 0.01, "epochs": 10, "seed": 0},
}

SEEDED_KINDS = frozenset({ModelKind.RANDOM_FOREST, ModelKind.LINEAR_SVC})

_COUNT_PARAMS = {
    "max_iterations",
    "max_depth",
    "min_samples_leaf",
    "n_trees",
    "n_rounds",
    "k",
    "epochs",
}


@dataclass
class FittedModel:
    kind: ModelKind
    params: dict[str, Any]
    feature_names: list[str]
    impl: Any

    def __post_init__(self) -> None:
        self.params = dict(self.params)


def _check_params(kind: ModelKind, params: Mapping[str, Any], n_rows: int) -> dict[str, Any]:
    merged = dict(DEFAULT_PARAMS[kind])
    unknown = set(params) - set(merged)
    if unknown:
        raise BadSpec(f"{kind.value} does not take parameters {sorted(unknown)}")
    merged.update(params)
    for name, value in merged.items():
        if name in _COUNT_PARAMS and (not isinstance(value, int) or value < 1):
            raise BadSpec(f"{kind.value}: {name} must be a positive integer, got {value!r}")
    if kind is ModelKind.RANDOM_FOREST:
        frac = merged["feature_subsample_fraction"]
        if not 0.0 < frac <= 1.0:
            raise BadSpec(f"feature_subsample_fraction must be in (0, 1], got {frac!r}")
    if kind is ModelKind.K_NEAREST and merged["k"] > n_rows:
        raise BadSpec(f"k = {merged['k']} exceeds the {n_rows} training rows")
    return merged


def _as_matrix_labels(ds: ProcessedDataset) -> tuple[np.ndarray, np.ndarray]:
    return np.ascontiguousarray(ds.matrix, dtype=np.float64), ds.labels


def fit(kind: ModelKind, params: Mapping[str, Any] | None, ds: ProcessedDataset) -> FittedModel:
    matrix, y = _as_matrix_labels(ds)
    merged = _check_params(kind, params or {}, matrix.shape[0])
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClass(f"training data holds only class {classes[0] if classes.size else '?'}")

    if kind is ModelKind.LOGISTIC_REGRESSION:
        impl = fit_logistic(matrix, y, **merged)
    elif kind is ModelKind.DECISION_TREE:
        y01 = y.astype(np.int64)
        impl = grow_tree(matrix, y01, presort(matrix), merged["max_depth"], merged["min_samples_leaf"])
    elif kind is ModelKind.RANDOM_FOREST:
        impl = fit_random_forest(matrix, y, **merged)
    elif kind is ModelKind.GRADIENT_BOOSTED_TREES:
        impl = fit_boosted_trees(matrix, y, **merged)
    elif kind is ModelKind.GAUSSIAN_NB:
        impl = fit_gaussian_nb(matrix, y, **merged)
    elif kind is ModelKind.MULTINOMIAL_NB:
        if (matrix < 0).any():
            raise NegativeFeature("MultinomialNB needs nonnegative features (count-like inputs)")
        impl = fit_multinomial_nb(matrix, y, **merged)
    elif kind is ModelKind.BERNOULLI_NB:
        impl = fit_bernoulli_nb(matrix, y, **merged)
    elif kind is ModelKind.K_NEAREST:
        impl = fit_knearest(matrix, y, **merged)
    elif kind is ModelKind.LINEAR_SVC:
        impl = fit_linear_svc(matrix, y, **merged)
    else:  # pragma: no cover - enum is closed
        raise BadSpec(f"unknown model kind {kind!r}")
    return FittedModel(kind=kind, params=merged, feature_names=list(ds.feature_names), impl=impl)


def _prediction_matrix(model: FittedModel, data: ProcessedDataset | np.ndarray) -> np.ndarray:
    if isinstance(data, ProcessedDataset):
        if data.feature_names != model.feature_names:
            raise FeatureMismatch(
                f"dataset features do not match the fitted model "
                f"({len(data.feature_names)} vs {len(model.feature_names)} columns or reordered)"
            )
        return np.ascontiguousarray(data.matrix, dtype=np.float64)
    matrix = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if matrix.shape[1] != len(model.feature_names):
        raise FeatureMismatch(
            f"expected {len(model.feature_names)} feature columns, got {matrix.shape[1]}"
        )
    return matrix


def predict_proba(model: FittedModel, data: ProcessedDataset | np.ndarray) -> np.ndarray:
    matrix = _prediction_matrix(model, data)
    if isinstance(model.impl, TreeNode):
        probs = tree_apply(model.impl, matrix)
    else:
        probs = model.impl.predict_proba(matrix)
    return np.clip(probs, 0.0, 1.0)


def predict_label(
    model: FittedModel, data: ProcessedDataset | np.ndarray, threshold: float = 0.5
) -> np.ndarray:
    return (predict_proba(model, data) >= threshold).astype(np.int64)


def decision_tree_dot(model: FittedModel, title: str = "tree") -> str:
    if not isinstance(model.impl, TreeNode):
        raise BadSpec(f"DOT export applies to decision trees, not {model.kind.value}")
    return tree_to_dot(model.impl, model.feature_names, title=title)


def grid_search(
    kind: ModelKind,
    grid: Mapping[str, Sequence[Any]],
    ds: ProcessedDataset,
    folds: int,
    seed: int = 0,
) -> dict[str, Any]:
    """Exhaustive search over the param grid, maximizing mean CV F1.

    Candidates enumerate in key order (insertion order of ``grid``);
    ties keep the earliest candidate.  Candidates whose fits fail are
    skipped; if every one fails, AllCandidatesFailed reports the last
    reason.
    """
    from ..evaluate import cross_validate  # late import; evaluate depends on models

    if not grid:
        raise AllCandidatesFailed("empty parameter grid")
    if folds < 2:
        raise BadSpec(f"grid search needs at least 2 folds, got {folds}")
    names = list(grid.keys())
    best: tuple[float, dict[str, Any]] | None = None
    last_error: WorkbenchError | None = None
    for combo in itertools.product(*(grid[name] for name in names)):
        candidate = dict(zip(names, combo))
        try:
            report = cross_validate(kind, candidate, ds, folds=folds, seed=seed)
        except WorkbenchError as exc:
            last_error = exc
            continue
        score = report.mean_metrics.f1
        if best is None or score > best[0]:
            best = (score, candidate)
    if best is None:
        raise AllCandidatesFailed(f"all grid candidates failed; last error: {last_error}")
    return best[1]


ALL_KINDS: tuple[ModelKind, ...] = tuple(ModelKind)

__all__ = [
    "ALL_KINDS",
    "CLI_ALIASES",
    "DEFAULT_PARAMS",
    "DISPLAY_NAMES",
    "FittedModel",
    "ModelKind",
    "SEEDED_KINDS",
    "decision_tree_dot",
    "fit",
    "grid_search",
    "predict_label",
    "predict_proba",
]
