"""Randomized decision trees and bagged forests with addressable leaves.

Trees are grown fully (Gini impurity, midpoint thresholds, random feature
subsets of ceil(sqrt(p)) per node by default) on bootstrap resamples of the
training set. Leaves carry contiguous ids so that downstream code can ask
"which leaf does this instance fall in" cheaply; that query is the basis of
the leaf-co-occurrence dissimilarity in :mod:`mvrfd.dissimilarity`.

Tree k draws its randomness from a child seed of (config.seed, k), so a
forest is identical whether trees are grown serially or in parallel.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .seeding import child_rng

FOREST_FORMAT_VERSION = 1

# Minimum Gini decrease for a split to count as an improvement.
_MIN_IMPROVEMENT = 1e-12


@dataclass(frozen=True)
class Leaf:
    leaf_id: int
    class_counts: np.ndarray  # (n_classes,) int64, sums to >= 1


@dataclass(frozen=True)
class Internal:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class Tree:
    root: TreeNode
    num_leaves: int
    feature_space_width: int
    bootstrap_indices: np.ndarray  # (n_train,) indices drawn with replacement
    leaf_class_counts: np.ndarray  # (num_leaves, n_classes) int64


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    num_classes: int
    training_size: int

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    @property
    def feature_space_width(self) -> int:
        return self.trees[0].feature_space_width


@dataclass(frozen=True)
class ForestConfig:
    """Training knobs; defaults grow 500 fully developed trees."""

    num_trees: int = 500
    mtry: Optional[int] = None  # None -> ceil(sqrt(n_features))
    min_samples_split: int = 2
    max_depth: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError(f"num_trees must be >= 1, got {self.num_trees}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError(f"mtry must be >= 1, got {self.mtry}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")

    def resolved_mtry(self, n_features: int) -> int:
        if self.mtry is not None:
            return min(self.mtry, n_features)
        return min(int(math.ceil(math.sqrt(n_features))), n_features)


def _score_candidate_splits(values: np.ndarray, labels: np.ndarray, n_classes: int):
    """Best (cut position, column, weighted child impurity score) over the
    candidate feature block. Score is sum of per-side (class count)^2 / size,
    to be maximized; -inf marks cuts between equal values."""
    n, _ = values.shape
    order = np.argsort(values, axis=0, kind="stable")
    sorted_values = np.take_along_axis(values, order, axis=0)
    sorted_labels = labels[order]
    left_sizes = np.arange(1, n, dtype=np.float64)[:, None]
    right_sizes = n - left_sizes
    sumsq_left = 0.0
    sumsq_right = 0.0
    for c in range(n_classes):
        left_counts = np.cumsum(sorted_labels == c, axis=0)[:-1].astype(np.float64)
        total = float(np.count_nonzero(labels == c))
        sumsq_left = sumsq_left + left_counts ** 2
        sumsq_right = sumsq_right + (total - left_counts) ** 2
    score = sumsq_left / left_sizes + sumsq_right / right_sizes
    score[sorted_values[1:] <= sorted_values[:-1]] = -np.inf
    flat = int(np.argmax(score))
    cut, col = np.unravel_index(flat, score.shape)
    return cut, col, score[cut, col], sorted_values


def _find_split(X, labels, rows, feature_ids, n_classes):
    """Best improving split on the given rows among candidate features, or None."""
    values = X[np.ix_(rows, feature_ids)]
    n = len(rows)
    cut, col, score, sorted_values = _score_candidate_splits(values, labels[rows], n_classes)
    if not np.isfinite(score):
        return None
    class_totals = np.bincount(labels[rows], minlength=n_classes).astype(np.float64)
    parent_gini = 1.0 - float((class_totals ** 2).sum()) / (n * n)
    child_gini = 1.0 - float(score) / n
    if parent_gini - child_gini <= _MIN_IMPROVEMENT:
        return None
    low = float(sorted_values[cut, col])
    high = float(sorted_values[cut + 1, col])
    threshold = 0.5 * (low + high)
    # Adjacent floats can round the midpoint up to the right value; the
    # descent rule is "x <= threshold goes left", so pin to the left value.
    if threshold >= high:
        threshold = low
    return int(feature_ids[col]), threshold


def _grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, config: ForestConfig, tree_index: int) -> Tree:
    n, p = X.shape
    rng = child_rng(config.seed, "tree", tree_index)
    bootstrap = rng.integers(0, n, size=n)
    Xb = X[bootstrap]
    yb = y[bootstrap]
    mtry = config.resolved_mtry(p)
    leaf_counts: list[np.ndarray] = []

    def make_leaf(rows) -> Leaf:
        counts = np.bincount(yb[rows], minlength=n_classes)
        leaf = Leaf(leaf_id=len(leaf_counts), class_counts=counts)
        leaf_counts.append(counts)
        return leaf

    def build(rows: np.ndarray, depth: int) -> TreeNode:
        node_labels = yb[rows]
        if (
            len(rows) < config.min_samples_split
            or (config.max_depth is not None and depth >= config.max_depth)
            or (node_labels == node_labels[0]).all()
        ):
            return make_leaf(rows)
        split = _find_split(Xb, yb, rows, rng.choice(p, size=mtry, replace=False), n_classes)
        if split is None:
            # One retry with a fresh feature draw, then give up on this node.
            split = _find_split(Xb, yb, rows, rng.choice(p, size=mtry, replace=False), n_classes)
        if split is None:
            return make_leaf(rows)
        feature, threshold = split
        go_left = Xb[rows, feature] <= threshold
        left = build(rows[go_left], depth + 1)
        right = build(rows[~go_left], depth + 1)
        return Internal(feature_index=feature, threshold=threshold, left=left, right=right)

    root = build(np.arange(n), 0)
    return Tree(
        root=root,
        num_leaves=len(leaf_counts),
        feature_space_width=p,
        bootstrap_indices=bootstrap,
        leaf_class_counts=np.asarray(leaf_counts, dtype=np.int64),
    )


def _grow_tree_range(args):
    X, y, n_classes, config, start, stop = args
    return [_grow_tree(X, y, n_classes, config, k) for k in range(start, stop)]


def train_forest(
    features: np.ndarray, labels: np.ndarray, config: ForestConfig, n_jobs: int = 1
) -> Forest:
    """Train ``config.num_trees`` bagged trees on a feature table.

    Each tree is grown on a bootstrap sample of size n (drawn with
    replacement) with per-node random feature subsets. Results are fully
    determined by (features, labels, config), independent of n_jobs.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[1] < 1 or X.shape[0] < 2:
        raise ValueError(f"feature table must be 2-D with >= 2 rows and >= 1 column, got {X.shape}")
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} feature rows vs {len(y)} labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("training labels contain a single class")
    n_classes = int(y.max()) + 1
    m = config.num_trees
    if n_jobs > 1 and m > 1:
        workers = min(n_jobs, m)
        bounds = np.linspace(0, m, workers + 1, dtype=int)
        chunks = [(X, y, n_classes, config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_grow_tree_range, chunks))
        trees = [t for part in parts for t in part]
    else:
        trees = [_grow_tree(X, y, n_classes, config, k) for k in range(m)]
    return Forest(trees=tuple(trees), num_classes=n_classes, training_size=X.shape[0])


def leaf_index(tree: Tree, x: np.ndarray) -> int:
    """Leaf id reached by descending the split tests for one instance."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.feature_space_width,):
        raise ValueError(f"expected vector of width {tree.feature_space_width}, got {x.shape}")
    node = tree.root
    while isinstance(node, Internal):
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node.leaf_id


def apply_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Leaf ids for every row of X (vectorized descent)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.feature_space_width:
        raise ValueError(f"expected (n, {tree.feature_space_width}) table, got {X.shape}")
    out = np.empty(X.shape[0], dtype=np.int64)
    stack = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if isinstance(node, Leaf):
            out[idx] = node.leaf_id
            continue
        mask = X[idx, node.feature_index] <= node.threshold
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if left_idx.size:
            stack.append((node.left, left_idx))
        if right_idx.size:
            stack.append((node.right, right_idx))
    return out


def apply_forest(forest: Forest, X: np.ndarray) -> np.ndarray:
    """(n_rows, num_trees) leaf ids."""
    return np.stack([apply_tree(tree, X) for tree in forest.trees], axis=1)


def predict_forest_batch(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Predicted class per row: argmax of summed per-tree leaf class
    proportions, ties resolved to the lowest class index."""
    X = np.asarray(X, dtype=np.float64)
    scores = np.zeros((X.shape[0], forest.num_classes))
    for tree in forest.trees:
        counts = tree.leaf_class_counts.astype(np.float64)
        probs = counts / counts.sum(axis=1, keepdims=True)
        scores += probs[apply_tree(tree, X)]
    return np.argmax(scores, axis=1)


def predict_forest(forest: Forest, x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (forest.feature_space_width,):
        raise ValueError(f"expected vector of width {forest.feature_space_width}, got {x.shape}")
    return int(predict_forest_batch(forest, x[None, :])[0])


def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "id": node.leaf_id, "counts": node.class_counts.tolist()}
    return {
        "kind": "split",
        "feature": node.feature_index,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict) -> TreeNode:
    if data["kind"] == "leaf":
        return Leaf(leaf_id=data["id"], class_counts=np.asarray(data["counts"], dtype=np.int64))
    return Internal(
        feature_index=data["feature"],
        threshold=data["threshold"],
        left=_node_from_dict(data["left"]),
        right=_node_from_dict(data["right"]),
    )


def save_forest(forest: Forest, path: str | Path) -> None:
    """Cache a trained forest as versioned JSON; round-trips exactly."""
    payload = {
        "format_version": FOREST_FORMAT_VERSION,
        "num_classes": forest.num_classes,
        "training_size": forest.training_size,
        "trees": [
            {
                "feature_space_width": t.feature_space_width,
                "bootstrap_indices": t.bootstrap_indices.tolist(),
                "root": _node_to_dict(t.root),
            }
            for t in forest.trees
        ],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_forest(path: str | Path) -> Forest:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != FOREST_FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version: {version}")
    trees = []
    for entry in payload["trees"]:
        root = _node_from_dict(entry["root"])
        leaf_counts: list[np.ndarray] = []

        def collect(node: TreeNode):
            if isinstance(node, Leaf):
                while len(leaf_counts) <= node.leaf_id:
                    leaf_counts.append(None)  # type: ignore[arg-type]
                leaf_counts[node.leaf_id] = node.class_counts
            else:
                collect(node.left)
                collect(node.right)

        collect(root)
        trees.append(
            Tree(
                root=root,
                num_leaves=len(leaf_counts),
                feature_space_width=entry["feature_space_width"],
                bootstrap_indices=np.asarray(entry["bootstrap_indices"], dtype=np.int64),
                leaf_class_counts=np.asarray(leaf_counts, dtype=np.int64),
            )
        )
    return Forest(trees=tuple(trees), num_classes=payload["num_classes"], training_size=payload["training_size"])
