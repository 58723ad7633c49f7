"""Bagged and boosted tree ensembles on top of the CART builder.

The forest averages leaf probabilities over bootstrap-grown trees with
per-split feature subsampling; each tree gets its own derived seed so a
whole fit is reproducible from one integer.  The boosted model is
Newton boosting on logistic loss from a zero initial score: per round a
depth-limited regression tree is fit to gradient/hessian statistics and
its leaf weights -G/(H + l2) are shrunk by the learning rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..rng import derive_seed
from .linear import clip_probability, sigmoid
from .tree import (
    TreeNode,
    bootstrap_order,
    grow_regression_tree,
    grow_tree,
    presort,
    tree_apply,
)

LEAF_WEIGHT_CAP = 20.0  # guards -G/(H+l2) blowup when l2 = 0 and H is tiny


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    seed: int

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        acc = np.zeros(matrix.shape[0])
        for tree in self.trees:
            acc += tree_apply(tree, matrix)
        return acc / len(self.trees)

    def state_dict(self) -> dict:
        return {"seed": self.seed, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_state(cls, state: dict) -> "RandomForestModel":
        return cls(trees=[TreeNode.from_dict(d) for d in state["trees"]], seed=int(state["seed"]))


def fit_random_forest(
    matrix: np.ndarray,
    y: np.ndarray,
    n_trees: int = 15,
    max_depth: int = 5,
    feature_subsample_fraction: float = 0.5,
    seed: int = 0,
    bootstrap: bool = True,
) -> RandomForestModel:
    n, d = matrix.shape
    y01 = y.astype(np.int64)
    base_order = presort(matrix)
    n_sub = min(d, max(1, math.ceil(feature_subsample_fraction * d)))
    trees: list[TreeNode] = []
    for t in range(n_trees):
        rng = np.random.default_rng(derive_seed(seed, t))
        if bootstrap:
            draws = rng.integers(0, n, size=n)
            counts = np.bincount(draws, minlength=n)
            order = bootstrap_order(base_order, counts)
        else:
            order = base_order

        def choose() -> np.ndarray:
            # sorted so the split scan visits features in column order,
            # keeping tie-breaks identical to the single-tree builder
            return np.sort(rng.choice(d, size=n_sub, replace=False))

        trees.append(
            grow_tree(matrix, y01, order, max_depth, min_samples_leaf=1, feature_chooser=choose)
        )
    return RandomForestModel(trees=trees, seed=seed)


@dataclass
class BoostedTreesModel:
    trees: list[TreeNode]
    learning_rate: float
    training_loss: list[float] = field(default_factory=list)

    def decision_scores(self, matrix: np.ndarray) -> np.ndarray:
        scores = np.zeros(matrix.shape[0])
        for tree in self.trees:
            scores += self.learning_rate * tree_apply(tree, matrix)
        return scores

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_scores(matrix))

    def state_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_state(cls, state: dict) -> "BoostedTreesModel":
        return cls(
            trees=[TreeNode.from_dict(d) for d in state["trees"]],
            learning_rate=float(state["learning_rate"]),
        )


def _cap_leaves(node: TreeNode) -> None:
    if node.is_leaf:
        node.value = float(np.clip(node.value, -LEAF_WEIGHT_CAP, LEAF_WEIGHT_CAP))
        return
    _cap_leaves(node.left)
    _cap_leaves(node.right)


def fit_boosted_trees(
    matrix: np.ndarray,
    y: np.ndarray,
    n_rounds: int = 20,
    learning_rate: float = 0.3,
    max_depth: int = 3,
    l2_leaf_regularization: float = 1.0,
) -> BoostedTreesModel:
    y = y.astype(np.float64)
    order = presort(matrix)
    scores = np.zeros(matrix.shape[0])
    trees: list[TreeNode] = []
    losses: list[float] = []
    for _ in range(n_rounds):
        p = clip_probability(sigmoid(scores))
        grad = p - y
        hess = p * (1.0 - p)
        tree = grow_regression_tree(
            matrix, grad, hess, order, max_depth=max_depth, l2=l2_leaf_regularization
        )
        _cap_leaves(tree)
        trees.append(tree)
        scores = scores + learning_rate * tree_apply(tree, matrix)
        p_new = clip_probability(sigmoid(scores))
        losses.append(float(-np.mean(y * np.log(p_new) + (1.0 - y) * np.log(1.0 - p_new))))
    return BoostedTreesModel(trees=trees, learning_rate=learning_rate, training_loss=losses)
