"""Early-integration feature selection: ReliefF scores, SVM-RFE ranking and
the band rules that fix how many features survive.

ReliefF runs a deterministic full sweep over all instances with k nearest
hits and, per opposing class, k nearest prior-weighted misses, on L1
distances over min-max-normalized features. SVM-RFE repeatedly fits a
linear-kernel SVM (inner-product kernel of standardized features, C = 1),
drops the worse-scoring half of the surviving features and ranks by reverse
elimination order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import round_half_up
from .svm import train_svm


@dataclass(frozen=True)
class FeatureRanking:
    """Per-feature scores (higher is better) plus the induced ordering."""

    scores: np.ndarray  # (n_features,)
    order: np.ndarray   # feature indices by descending score, index breaks ties

    @property
    def n_features(self) -> int:
        return len(self.scores)


def _ranking_from_scores(scores: np.ndarray) -> FeatureRanking:
    order = np.lexsort((np.arange(len(scores)), -scores))
    return FeatureRanking(scores=scores, order=order)


def relief_scores(features: np.ndarray, labels: np.ndarray, k_neighbors: int) -> FeatureRanking:
    """ReliefF feature weights over a full sweep of the instances.

    Requires every class to have at least ``k_neighbors + 1`` members so
    that k hits and k misses exist for each instance. Scores land in
    [-1, 1]; an all-constant table scores 0 everywhere.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != len(y):
        raise ValueError(f"bad shapes: features {x.shape}, labels {len(y)}")
    if k_neighbors < 1:
        raise ValueError(f"k_neighbors must be >= 1, got {k_neighbors}")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    if counts.min() < k_neighbors + 1:
        smallest = classes[int(np.argmin(counts))]
        raise ValueError(
            f"class {smallest} has {counts.min()} members, too few for k={k_neighbors}"
        )
    n, p = x.shape
    span = x.max(axis=0) - x.min(axis=0)
    scale = np.where(span > 0, span, 1.0)
    xn = (x - x.min(axis=0)) / scale
    xn[:, span == 0] = 0.0
    priors = {int(c): cnt / n for c, cnt in zip(classes, counts)}
    weights = np.zeros(p)
    k = k_neighbors
    for i in range(n):
        diffs = np.abs(xn - xn[i])
        distances = diffs.sum(axis=1)
        distances[i] = np.inf  # never pick the instance itself
        order = np.argsort(distances, kind="stable")
        own = int(y[i])
        hits = order[y[order] == own][:k]
        weights -= diffs[hits].sum(axis=0) / (n * k)
        for c in classes:
            c = int(c)
            if c == own:
                continue
            misses = order[y[order] == c][:k]
            weight = priors[c] / (1.0 - priors[own])
            weights += weight * diffs[misses].sum(axis=0) / (n * k)
    return _ranking_from_scores(weights)


def svmrfe_rank(features: np.ndarray, labels: np.ndarray) -> FeatureRanking:
    """Recursive feature elimination driven by linear SVM weight magnitudes.

    Zero-variance features cannot carry weight and are eliminated first.
    Each round drops the bottom half (at least one) of the surviving
    features; the final ranking is the reverse of elimination order.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != len(y):
        raise ValueError(f"bad shapes: features {x.shape}, labels {len(y)}")
    if len(np.unique(y)) < 2:
        raise ValueError("need at least 2 classes")
    p = x.shape[1]
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    variant = std > 0
    standardized = np.zeros_like(x)
    standardized[:, variant] = (x[:, variant] - mean[variant]) / std[variant]
    eliminated: list[int] = [int(f) for f in np.flatnonzero(~variant)]
    surviving = np.flatnonzero(variant)
    while len(surviving) > 1:
        xs = standardized[:, surviving]
        model = train_svm(xs @ xs.T, y, c=1.0)
        importance = np.abs(model.dual_coefficients @ xs).sum(axis=0)
        worst_first = np.lexsort((surviving, importance))
        n_drop = max(len(surviving) // 2, 1)
        eliminated.extend(int(surviving[j]) for j in worst_first[:n_drop])
        keep = np.ones(len(surviving), dtype=bool)
        keep[worst_first[:n_drop]] = False
        surviving = surviving[keep]
    eliminated.extend(int(f) for f in surviving)
    # Elimination position doubles as the score: later survival means better.
    scores = np.empty(p)
    for position, feature in enumerate(eliminated):
        scores[feature] = float(position)
    return _ranking_from_scores(scores)


def select_count(p: int) -> int:
    """How many features to keep out of p, by width band.

    Bands: under 10 keep 75%, under 75 keep 40%, under 100 keep 10%, under
    1000 keep 3%, otherwise keep 25; always at least one. Boundary widths
    fall into the higher band.
    """
    if p < 1:
        raise ValueError(f"feature count must be >= 1, got {p}")
    if p < 10:
        n = round_half_up(0.75 * p)
    elif p < 75:
        n = round_half_up(0.40 * p)
    elif p < 100:
        n = round_half_up(0.10 * p)
    elif p < 1000:
        n = round_half_up(0.03 * p)
    else:
        n = 25
    return min(max(n, 1), p)


def apply_selection(features: np.ndarray, ranking: FeatureRanking, count: int) -> np.ndarray:
    """Restrict a table to the top-``count`` features in ranking order."""
    x = np.asarray(features, dtype=np.float64)
    if not 1 <= count <= ranking.n_features:
        raise ValueError(f"count must be in [1, {ranking.n_features}], got {count}")
    if x.shape[1] != ranking.n_features:
        raise ValueError(f"table has {x.shape[1]} columns, ranking covers {ranking.n_features}")
    return x[:, ranking.order[:count]]


def save_ranking(ranking: FeatureRanking, feature_names, path) -> None:
    """CSV export: one row per feature in rank order (rank 1 is best)."""
    import csv

    names = list(feature_names)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["feature_index", "feature_name", "score", "rank"])
        for rank, feature in enumerate(ranking.order, start=1):
            writer.writerow([int(feature), names[feature], repr(float(ranking.scores[feature])), rank])
