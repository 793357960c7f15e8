"""Leaf-co-occurrence dissimilarity between instances, per tree and per forest.

A single tree scores a pair 0 when both instances reach the same leaf and 1
otherwise; a forest averages that indicator over its trees, giving values on
the grid {0, 1/M, ..., 1}. Matrices over whole instance tables are built by
computing each tree's leaf assignment once and accumulating same-leaf counts
as integers, dividing by the tree count only at the end.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .forest import Forest, Tree, apply_tree, leaf_index


@dataclass(frozen=True)
class DissimilarityMatrix:
    values: np.ndarray  # (n_rows, n_columns) float64 in [0, 1]
    row_instances: tuple[int, ...]
    column_instances: tuple[int, ...]

    @property
    def is_square(self) -> bool:
        return self.row_instances == self.column_instances

    def validate(self, num_trees: int | None = None) -> list[str]:
        """Every violated matrix invariant (empty list means valid)."""
        problems = []
        v = self.values
        if v.shape != (len(self.row_instances), len(self.column_instances)):
            problems.append("axis lists do not match the value shape")
            return problems
        if not np.isfinite(v).all():
            problems.append("non-finite entries")
        if v.min(initial=0.0) < 0.0 or v.max(initial=0.0) > 1.0:
            problems.append("entries outside [0, 1]")
        if self.is_square:
            if not np.allclose(v, v.T, atol=0.0):
                problems.append("square matrix is not symmetric")
            if np.abs(np.diag(v)).max(initial=0.0) != 0.0:
                problems.append("square matrix has a nonzero diagonal")
        if num_trees is not None:
            scaled = v * num_trees
            if np.abs(scaled - np.round(scaled)).max(initial=0.0) > 1e-9:
                problems.append(f"entries are not multiples of 1/{num_trees}")
        return problems


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray
    row_instances: tuple[int, ...]
    column_instances: tuple[int, ...]

    @property
    def is_square(self) -> bool:
        return self.row_instances == self.column_instances


def tree_dissimilarity(tree: Tree, x_i: np.ndarray, x_j: np.ndarray) -> int:
    """0 when both instances fall in the same leaf of the tree, else 1."""
    return 0 if leaf_index(tree, x_i) == leaf_index(tree, x_j) else 1


def forest_dissimilarity(forest: Forest, x_i: np.ndarray, x_j: np.ndarray) -> float:
    """Fraction of trees in which the two instances land in different leaves."""
    disagreements = sum(tree_dissimilarity(tree, x_i, x_j) for tree in forest.trees)
    return disagreements / forest.num_trees


def build_matrix(
    forest: Forest,
    rows: np.ndarray,
    columns: np.ndarray,
    row_instances: Sequence[int] | None = None,
    column_instances: Sequence[int] | None = None,
) -> DissimilarityMatrix:
    """Pairwise forest dissimilarities between two instance tables.

    Entry (i, j) equals ``forest_dissimilarity(forest, rows[i], columns[j])``.
    When rows and columns are the same training table the result is symmetric
    with a zero diagonal. Same-leaf counts are accumulated as integers so the
    result is bit-identical regardless of tree processing order.
    """
    rows = np.asarray(rows, dtype=np.float64)
    columns = np.asarray(columns, dtype=np.float64)
    same_table = rows is columns or (rows.shape == columns.shape and np.array_equal(rows, columns))
    same_leaf = np.zeros((rows.shape[0], columns.shape[0]), dtype=np.int64)
    for tree in forest.trees:
        row_leaves = apply_tree(tree, rows)
        column_leaves = row_leaves if same_table else apply_tree(tree, columns)
        same_leaf += row_leaves[:, None] == column_leaves[None, :]
    m = forest.num_trees
    values = (m - same_leaf) / m
    if row_instances is None:
        row_instances = range(rows.shape[0])
    if column_instances is None:
        column_instances = range(columns.shape[0])
    return DissimilarityMatrix(
        values=values,
        row_instances=tuple(int(i) for i in row_instances),
        column_instances=tuple(int(i) for i in column_instances),
    )


def joint_average(matrices: Sequence[DissimilarityMatrix]) -> DissimilarityMatrix:
    """Entrywise mean of per-view matrices sharing the same axes."""
    if not matrices:
        raise ValueError("need at least one matrix to average")
    first = matrices[0]
    for m in matrices[1:]:
        if m.values.shape != first.values.shape:
            raise ValueError(f"shape mismatch: {m.values.shape} vs {first.values.shape}")
        if m.row_instances != first.row_instances or m.column_instances != first.column_instances:
            raise ValueError("matrices describe different instance axes")
    stacked = np.stack([m.values for m in matrices], axis=0)
    return DissimilarityMatrix(
        values=stacked.sum(axis=0) / len(matrices),
        row_instances=first.row_instances,
        column_instances=first.column_instances,
    )


def to_similarity(d: DissimilarityMatrix) -> SimilarityMatrix:
    """Entrywise 1 - d; a square matrix gains a unit diagonal."""
    return SimilarityMatrix(
        values=1.0 - d.values,
        row_instances=d.row_instances,
        column_instances=d.column_instances,
    )


def save_matrix(matrix: DissimilarityMatrix | SimilarityMatrix, path: str | Path) -> None:
    """CSV export with instance indices as the header row and first column."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([""] + [str(i) for i in matrix.column_instances])
        for i, row in zip(matrix.row_instances, matrix.values):
            writer.writerow([str(i)] + [repr(float(x)) for x in row])


def load_matrix(path: str | Path) -> DissimilarityMatrix:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        column_instances = tuple(int(tok) for tok in header[1:])
        row_instances = []
        values = []
        for row in reader:
            row_instances.append(int(row[0]))
            values.append([float(tok) for tok in row[1:]])
    return DissimilarityMatrix(
        values=np.asarray(values, dtype=np.float64),
        row_instances=tuple(row_instances),
        column_instances=column_instances,
    )
