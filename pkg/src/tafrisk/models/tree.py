"""CART decision trees: classification by Gini, regression for boosting.

The builder keeps one argsort per feature for the whole tree (computed
once per fit) and evaluates every candidate split of a node in a single
batched pass: gather the node's sorted values and label prefix sums into
(n_features, n_node) matrices, score all boundaries at once, and take
the first maximum.  Row-major argmax means ties fall to the earlier
feature and then the smaller threshold, which is also the convention the
exhaustive-scan checks in the test suite use.

Split quality is computed from integer class counts,
``(pos_l^2 + neg_l^2) / n_l + (pos_r^2 + neg_r^2) / n_r`` (equivalent to
minimizing count-weighted Gini impurity), so scores carry no accumulated
rounding and an independent scan lands on bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class TreeNode:
    """One node; leaves have feature None and carry the node value."""

    value: float  # positive fraction (classification) or leaf weight (regression)
    n_samples: int
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "value": self.value,
            "n": self.n_samples,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        if "feature" not in doc:
            return cls(value=doc["value"], n_samples=doc["n"])
        return cls(
            value=doc["value"],
            n_samples=doc["n"],
            feature=doc["feature"],
            threshold=doc["threshold"],
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
        )


def presort(matrix: np.ndarray) -> np.ndarray:
    """(n_features, n_rows) matrix of row indices, each row a stable sort."""
    return np.argsort(matrix, axis=0, kind="stable").T.copy()


def bootstrap_order(sorted_idx: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sorted index matrix for a bootstrap sample given per-row draw counts.

    Repeating each row id by its count inside the already-sorted order
    yields the sort of the resampled data without re-sorting.
    """
    rows = [np.repeat(sorted_idx[j], counts[sorted_idx[j]]) for j in range(sorted_idx.shape[0])]
    return np.stack(rows)


def _best_split_classification(
    matrix: np.ndarray,
    y01: np.ndarray,
    sorted_idx: np.ndarray,
    feature_ids: np.ndarray,
    min_samples_leaf: int,
) -> tuple[int, float] | None:
    """Highest-scoring (feature, midpoint threshold) or None if no valid cut."""
    sub = sorted_idx[feature_ids]
    m = sub.shape[1]
    if m < 2 * min_samples_leaf:
        return None
    xs = matrix[sub, feature_ids[:, None]]
    pos_left = np.cumsum(y01[sub], axis=1)[:, :-1]
    n_left = np.arange(1, m, dtype=np.int64)
    pos_total = int(y01[sub[0]].sum())

    neg_left = n_left - pos_left
    pos_right = pos_total - pos_left
    n_right = m - n_left
    neg_right = n_right - pos_right
    score = (pos_left**2 + neg_left**2) / n_left + (pos_right**2 + neg_right**2) / n_right

    valid = xs[:, :-1] != xs[:, 1:]
    valid &= (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    if not valid.any():
        return None
    score[~valid] = -np.inf
    flat = int(np.argmax(score))
    fi, cut = divmod(flat, m - 1)
    feature = int(feature_ids[fi])
    threshold = (xs[fi, cut] + xs[fi, cut + 1]) / 2.0
    return feature, float(threshold)


def _best_split_regression(
    matrix: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    sorted_idx: np.ndarray,
    feature_ids: np.ndarray,
    l2: float,
    min_samples_leaf: int,
) -> tuple[int, float] | None:
    """Newton-gain split: maximize G_l^2/(H_l+l2) + G_r^2/(H_r+l2)."""
    sub = sorted_idx[feature_ids]
    m = sub.shape[1]
    if m < 2 * min_samples_leaf:
        return None
    xs = matrix[sub, feature_ids[:, None]]
    g_left = np.cumsum(grad[sub], axis=1)[:, :-1]
    h_left = np.cumsum(hess[sub], axis=1)[:, :-1]
    g_total = float(grad[sub[0]].sum())
    h_total = float(hess[sub[0]].sum())

    gain = g_left**2 / (h_left + l2) + (g_total - g_left) ** 2 / (h_total - h_left + l2)

    n_left = np.arange(1, m, dtype=np.int64)
    valid = xs[:, :-1] != xs[:, 1:]
    valid &= (n_left >= min_samples_leaf) & (m - n_left >= min_samples_leaf)
    parent = g_total**2 / (h_total + l2)
    valid &= gain > parent + 1e-12  # require a real improvement
    if not valid.any():
        return None
    gain[~valid] = -np.inf
    flat = int(np.argmax(gain))
    fi, cut = divmod(flat, m - 1)
    return int(feature_ids[fi]), float((xs[fi, cut] + xs[fi, cut + 1]) / 2.0)


def grow_tree(
    matrix: np.ndarray,
    y01: np.ndarray,
    sorted_idx: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
    feature_chooser: "Callable[[], np.ndarray] | None" = None,
) -> TreeNode:
    """Grow a classification tree; node value = positive fraction."""
    n_features = sorted_idx.shape[0]
    all_features = np.arange(n_features)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        rows = idx[0]
        m = rows.shape[0]
        pos = int(y01[rows].sum())
        node = TreeNode(value=pos / m, n_samples=m)
        if depth >= max_depth or pos == 0 or pos == m:
            return node
        feature_ids = feature_chooser() if feature_chooser is not None else all_features
        found = _best_split_classification(matrix, y01, idx, feature_ids, min_samples_leaf)
        if found is None:
            return node
        node.feature, node.threshold = found
        goes_left = matrix[:, node.feature] <= node.threshold
        mask = goes_left[idx]
        n_left = int(mask[0].sum())
        node.left = build(idx[mask].reshape(n_features, n_left), depth + 1)
        node.right = build(idx[~mask].reshape(n_features, m - n_left), depth + 1)
        return node

    return build(sorted_idx, 0)


def grow_regression_tree(
    matrix: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    sorted_idx: np.ndarray,
    max_depth: int,
    l2: float,
    min_samples_leaf: int = 1,
) -> TreeNode:
    """Grow a Newton-step tree; leaf value = -G/(H + l2)."""
    n_features = sorted_idx.shape[0]
    all_features = np.arange(n_features)

    def leaf_value(rows: np.ndarray) -> float:
        g = float(grad[rows].sum())
        h = float(hess[rows].sum())
        return -g / (h + l2)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        rows = idx[0]
        m = rows.shape[0]
        node = TreeNode(value=leaf_value(rows), n_samples=m)
        if depth >= max_depth:
            return node
        found = _best_split_regression(matrix, grad, hess, idx, all_features, l2, min_samples_leaf)
        if found is None:
            return node
        node.feature, node.threshold = found
        goes_left = matrix[:, node.feature] <= node.threshold
        mask = goes_left[idx]
        n_left = int(mask[0].sum())
        node.left = build(idx[mask].reshape(n_features, n_left), depth + 1)
        node.right = build(idx[~mask].reshape(n_features, m - n_left), depth + 1)
        return node

    return build(sorted_idx, 0)


def tree_apply(root: TreeNode, matrix: np.ndarray) -> np.ndarray:
    """Leaf value for every row, by batched descent."""
    out = np.empty(matrix.shape[0], dtype=np.float64)

    def descend(node: TreeNode, rows: np.ndarray) -> None:
        if node.is_leaf:
            out[rows] = node.value
            return
        left = matrix[rows, node.feature] <= node.threshold
        descend(node.left, rows[left])
        descend(node.right, rows[~left])

    descend(root, np.arange(matrix.shape[0]))
    return out


def count_leaves(root: TreeNode) -> int:
    if root.is_leaf:
        return 1
    return count_leaves(root.left) + count_leaves(root.right)


def tree_depth(root: TreeNode) -> int:
    if root.is_leaf:
        return 0
    return 1 + max(tree_depth(root.left), tree_depth(root.right))


# ---------------------------------------------------------------------------
# DOT rendering for tree fragments

def tree_to_dot(root: TreeNode, feature_names: list[str], title: str = "tree") -> str:
    lines = [
        f'digraph "{title}" {{',
        '  node [shape=box, fontname="Helvetica"];',
    ]
    counter = [0]

    def emit(node: TreeNode) -> int:
        my_id = counter[0]
        counter[0] += 1
        if node.is_leaf:
            label = f"value = {node.value:.3f}\\nn = {node.n_samples}"
        else:
            label = (
                f"{feature_names[node.feature]} <= {node.threshold:g}"
                f"\\nvalue = {node.value:.3f}\\nn = {node.n_samples}"
            )
        lines.append(f'  n{my_id} [label="{label}"];')
        if not node.is_leaf:
            left_id = emit(node.left)
            right_id = emit(node.right)
            lines.append(f'  n{my_id} -> n{left_id} [label="yes"];')
            lines.append(f'  n{my_id} -> n{right_id} [label="no"];')
        return my_id

    emit(root)
    lines.append("}")
    return "\n".join(lines) + "\n"
