"""Soft-margin SVM on caller-supplied precomputed kernels.

The dual is optimized by pairwise coordinate ascent on the maximal
KKT-violating pair. The kernel is used exactly as given and is not assumed
positive semidefinite: when the two-variable subproblem is not strictly
convex the step goes to the feasible box boundary, which still increases
the dual objective, and an iteration cap bounds the work; the best feasible
iterate is kept. Multi-class problems are handled one-vs-one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .seeding import child_rng

KKT_TOLERANCE = 1e-3
MAX_PAIR_UPDATES = 10_000
_BOUND_EPS = 1e-12


@dataclass(frozen=True)
class KernelGrid:
    """Ascending positive candidate values for the box parameter."""

    c_values: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)

    def __post_init__(self):
        if not self.c_values:
            raise ValueError("empty grid")
        if any(c <= 0 for c in self.c_values):
            raise ValueError(f"grid values must be positive: {self.c_values}")
        if any(b <= a for a, b in zip(self.c_values, self.c_values[1:])):
            raise ValueError(f"grid values must be strictly increasing: {self.c_values}")


@dataclass(frozen=True)
class SvmModel:
    """One-vs-one model over a precomputed training kernel."""

    dual_coefficients: np.ndarray  # (n_subproblems, n_train) signed weights
    biases: np.ndarray  # (n_subproblems,)
    class_pairs: tuple[tuple[int, int], ...]
    support_indices: np.ndarray
    num_classes: int
    c: float
    diagnostics: tuple[dict, ...] = field(default=(), compare=False)

    @property
    def n_train(self) -> int:
        return self.dual_coefficients.shape[1]


def _solve_pairwise(
    kernel: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float = KKT_TOLERANCE,
    max_updates: int = MAX_PAIR_UPDATES,
    record_objective: bool = False,
) -> tuple[np.ndarray, float, dict]:
    """Maximize the soft-margin dual for labels y in {-1, +1}.

    Returns (alpha, bias, info). info carries the iteration count, the final
    KKT violation, the dual objective and, optionally, the objective after
    every update.
    """
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of (1/2) a'Qa - e'a at a = 0
    running = 0.0
    best_running = 0.0
    best_alpha = alpha.copy()
    history = [0.0] if record_objective else None
    updates = 0
    while updates < max_updates:
        score = -y * grad
        up = ((y > 0) & (alpha < c - _BOUND_EPS)) | ((y < 0) & (alpha > _BOUND_EPS))
        low = ((y < 0) & (alpha < c - _BOUND_EPS)) | ((y > 0) & (alpha > _BOUND_EPS))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        violation = score[i] - score[j]
        if violation <= tol:
            break
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        room_i = (c - alpha[i]) if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else (c - alpha[j])
        step_max = min(room_i, room_j)
        if eta > _BOUND_EPS:
            step = min(violation / eta, step_max)
        else:
            # Non-convex direction: the objective increases all the way to
            # the box boundary.
            step = step_max
        alpha[i] = min(max(alpha[i] + y[i] * step, 0.0), c)
        alpha[j] = min(max(alpha[j] - y[j] * step, 0.0), c)
        grad += step * y * (kernel[:, i] - kernel[:, j])
        running += step * violation - 0.5 * eta * step * step
        if running > best_running:
            best_running = running
            best_alpha = alpha.copy()
        if history is not None:
            history.append(running)
        updates += 1
    if running < best_running:
        alpha = best_alpha
    # Recompute diagnostics from the returned iterate so they are exact even
    # if the best iterate was restored or the update cap was hit.
    weighted = alpha * y
    kv = kernel @ weighted
    score = y - kv
    objective = float(alpha.sum() - 0.5 * float(weighted @ kv))
    up = ((y > 0) & (alpha < c - _BOUND_EPS)) | ((y < 0) & (alpha > _BOUND_EPS))
    low = ((y < 0) & (alpha < c - _BOUND_EPS)) | ((y > 0) & (alpha > _BOUND_EPS))
    violation = 0.0
    if up.any() and low.any():
        violation = float(np.max(score[up]) - np.min(score[low]))
    free = (alpha > _BOUND_EPS) & (alpha < c - _BOUND_EPS)
    if free.any():
        bias = float(score[free].mean())
    else:
        bounds = []
        if up.any():
            bounds.append(float(np.max(score[up])))
        if low.any():
            bounds.append(float(np.min(score[low])))
        bias = float(np.mean(bounds)) if bounds else 0.0
    info = {
        "updates": updates,
        "converged": violation <= tol,
        "kkt_violation": max(violation, 0.0),
        "objective": objective,
    }
    if history is not None:
        info["objective_history"] = history
    return alpha, bias, info


def _kernel_values(kernel) -> np.ndarray:
    values = getattr(kernel, "values", kernel)
    return np.asarray(values, dtype=np.float64)


def train_svm(kernel, labels: np.ndarray, c: float) -> SvmModel:
    """Fit a one-vs-one SVM on a square train-by-train similarity kernel.

    ``kernel`` may be a SimilarityMatrix or a plain array. Each class pair
    (a, b) with a < b gets one binary subproblem where class a plays +1.
    """
    k = _kernel_values(kernel)
    y_all = np.asarray(labels, dtype=np.int64)
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel must be square, got {k.shape}")
    if k.shape[0] != len(y_all):
        raise ValueError(f"kernel is {k.shape[0]}x{k.shape[0]} but there are {len(y_all)} labels")
    if not np.isfinite(k).all():
        raise ValueError("kernel has non-finite entries")
    if not np.allclose(k, k.T, rtol=0.0, atol=1e-8):
        raise ValueError("kernel is not symmetric")
    classes = np.unique(y_all)
    if len(classes) < 2:
        raise ValueError("training labels contain a single class")
    pairs = tuple((int(a), int(b)) for a, b in combinations(classes, 2))
    n = len(y_all)
    coefficients = np.zeros((len(pairs), n))
    biases = np.zeros(len(pairs))
    diagnostics = []
    for s, (a, b) in enumerate(pairs):
        idx = np.flatnonzero((y_all == a) | (y_all == b))
        y = np.where(y_all[idx] == a, 1.0, -1.0)
        sub_kernel = k[np.ix_(idx, idx)]
        alpha, bias, info = _solve_pairwise(sub_kernel, y, c)
        coefficients[s, idx] = alpha * y
        biases[s] = bias
        diagnostics.append(info)
    support = np.flatnonzero(np.any(np.abs(coefficients) > 0.0, axis=0))
    return SvmModel(
        dual_coefficients=coefficients,
        biases=biases,
        class_pairs=pairs,
        support_indices=support,
        num_classes=int(y_all.max()) + 1,
        c=float(c),
        diagnostics=tuple(diagnostics),
    )


def decision_values(model: SvmModel, kernel_rows: np.ndarray) -> np.ndarray:
    """(n_rows, n_subproblems) decision values for test-vs-train kernel rows."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=np.float64))
    if rows.shape[1] != model.n_train:
        raise ValueError(f"kernel rows must have length {model.n_train}, got {rows.shape[1]}")
    return rows @ model.dual_coefficients.T + model.biases


def predict_svm_batch(model: SvmModel, kernel_rows: np.ndarray) -> np.ndarray:
    """One-vs-one voting; ties resolve to the lowest class index."""
    decisions = decision_values(model, kernel_rows)
    votes = np.zeros((decisions.shape[0], model.num_classes), dtype=np.int64)
    for s, (a, b) in enumerate(model.class_pairs):
        positive = decisions[:, s] > 0
        votes[positive, a] += 1
        votes[~positive, b] += 1
    return np.argmax(votes, axis=1)


def predict_svm(model: SvmModel, kernel_row: np.ndarray) -> int:
    row = np.asarray(kernel_row, dtype=np.float64)
    if row.shape != (model.n_train,):
        raise ValueError(f"expected kernel row of length {model.n_train}, got {row.shape}")
    return int(predict_svm_batch(model, row[None, :])[0])


def _stratified_folds(labels: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Fold id per instance: each class shuffled then dealt round-robin."""
    rng = child_rng(seed, "kernel-cv-folds")
    folds = np.empty(len(labels), dtype=np.int64)
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        folds[idx] = np.arange(len(idx)) % n_folds
    return folds


def cross_validated_accuracy(
    kernel, labels: np.ndarray, c: float, n_folds: int, seed: int
) -> float:
    """Mean validation accuracy of the given C over stratified kernel folds."""
    k = _kernel_values(kernel)
    y = np.asarray(labels, dtype=np.int64)
    folds = _stratified_folds(y, n_folds, seed)
    accuracies = []
    for fold in range(n_folds):
        train = np.flatnonzero(folds != fold)
        valid = np.flatnonzero(folds == fold)
        model = train_svm(k[np.ix_(train, train)], y[train], c)
        predicted = predict_svm_batch(model, k[np.ix_(valid, train)])
        accuracies.append(float(np.mean(predicted == y[valid])))
    return float(np.mean(accuracies))


def select_c(kernel, labels: np.ndarray, grid: KernelGrid | Sequence[float], seed: int) -> float:
    """Grid value with the best internal cross-validated accuracy.

    Uses stratified 3-fold cross-validation on the training kernel (2-fold
    when the smallest class has fewer than 3 members); ties go to the
    smallest C so results do not depend on float luck.
    """
    if not isinstance(grid, KernelGrid):
        grid = KernelGrid(c_values=tuple(float(c) for c in grid))
    y = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(y)
    counts = counts[counts > 0]
    if counts.min() < 2:
        raise ValueError("cannot cross-validate: a class has fewer than 2 members")
    n_folds = 3 if counts.min() >= 3 else 2
    best_c = grid.c_values[0]
    best_accuracy = -1.0
    for c in grid.c_values:
        accuracy = cross_validated_accuracy(kernel, y, c, n_folds, seed)
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_c = c
    return float(best_c)
