import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvrfd.dissimilarity import (
    DissimilarityMatrix,
    build_matrix,
    forest_dissimilarity,
    joint_average,
    load_matrix,
    save_matrix,
    to_similarity,
    tree_dissimilarity,
)
from mvrfd.forest import Forest, ForestConfig, leaf_index, train_forest

from test_forest import forest_of, one_split_tree, single_leaf_tree


def brute_force_matrix(forest: Forest, rows: np.ndarray, columns: np.ndarray) -> np.ndarray:
    """Independent recomputation: count disagreeing trees pair by pair."""
    out = np.empty((rows.shape[0], columns.shape[0]))
    for i in range(rows.shape[0]):
        for j in range(columns.shape[0]):
            different = 0
            for tree in forest.trees:
                if leaf_index(tree, rows[i]) != leaf_index(tree, columns[j]):
                    different += 1
            out[i, j] = different / forest.num_trees
    return out


def random_forest_and_data(seed, max_trees=5, max_rows=20, width=3):
    rng = np.random.default_rng(seed)
    n = rng.integers(4, max_rows + 1)
    x = rng.normal(size=(n, width))
    y = rng.integers(0, 2, n)
    if len(np.unique(y)) < 2:
        y[0], y[1] = 0, 1
    m = int(rng.integers(1, max_trees + 1))
    forest = train_forest(x, y, ForestConfig(num_trees=m, seed=int(rng.integers(0, 1000))))
    return forest, x


class TestPairwise:
    def test_identical_instances_zero(self):
        forest, x = random_forest_and_data(0)
        assert tree_dissimilarity(forest.trees[0], x[0], x[0]) == 0
        assert forest_dissimilarity(forest, x[2], x[2]) == 0.0

    def test_single_leaf_tree_always_zero(self):
        tree = single_leaf_tree([2, 2])
        assert tree_dissimilarity(tree, np.array([0.1]), np.array([99.0])) == 0

    def test_one_split_tree_manual_descent(self):
        tree = one_split_tree(threshold=0.5)
        assert tree_dissimilarity(tree, np.array([0.2]), np.array([0.9])) == 1
        assert tree_dissimilarity(tree, np.array([0.2]), np.array([0.4])) == 0

    def test_two_tree_half(self):
        same = single_leaf_tree([2, 2])
        split = one_split_tree(threshold=0.5)
        forest = forest_of([same, split])
        assert forest_dissimilarity(forest, np.array([0.2]), np.array([0.9])) == 0.5

    def test_width_mismatch(self):
        forest = forest_of([single_leaf_tree([1, 1])])
        with pytest.raises(ValueError, match="width"):
            forest_dissimilarity(forest, np.array([0.1, 0.2]), np.array([0.3, 0.4]))

    def test_grid_property(self):
        forest, x = random_forest_and_data(3, max_trees=4)
        for i in range(len(x)):
            for j in range(len(x)):
                value = forest_dissimilarity(forest, x[i], x[j])
                assert abs(value * forest.num_trees - round(value * forest.num_trees)) < 1e-12


class TestBuildMatrix:
    def test_square_invariants(self):
        forest, x = random_forest_and_data(4, max_trees=5, max_rows=12)
        matrix = build_matrix(forest, x, x)
        assert matrix.validate(num_trees=forest.num_trees) == []
        assert np.array_equal(matrix.values, matrix.values.T)
        assert np.all(np.diag(matrix.values) == 0.0)

    def test_hand_enumerated_single_tree(self):
        # One split isolating the third instance: leaves {0,1} and {2}.
        tree = one_split_tree(threshold=1.5, left_counts=(2, 0), right_counts=(0, 1))
        forest = Forest(trees=(tree,), num_classes=2, training_size=3)
        x = np.array([[1.0], [1.0], [2.0]])
        matrix = build_matrix(forest, x, x)
        expected = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
        assert np.array_equal(matrix.values, expected)

    def test_duplicate_test_row_scores_zero(self):
        forest, x = random_forest_and_data(5, max_trees=5)
        test_rows = np.vstack([x[1], x[1] + 100.0])
        matrix = build_matrix(forest, test_rows, x)
        assert matrix.values[0, 1] == 0.0

    def test_matches_brute_force_exactly(self):
        for seed in range(20):
            forest, x = random_forest_and_data(seed + 100)
            rng = np.random.default_rng(seed)
            test = rng.normal(size=(5, x.shape[1]))
            square = build_matrix(forest, x, x)
            rect = build_matrix(forest, test, x)
            assert np.array_equal(square.values, brute_force_matrix(forest, x, x))
            assert np.array_equal(rect.values, brute_force_matrix(forest, test, x))

    def test_axis_labels(self):
        forest, x = random_forest_and_data(6)
        matrix = build_matrix(forest, x[:3], x, row_instances=[7, 8, 9])
        assert matrix.row_instances == (7, 8, 9)
        assert matrix.column_instances == tuple(range(len(x)))
        assert not matrix.is_square


class TestJointAverage:
    def square(self, values, instances=None):
        values = np.asarray(values, dtype=np.float64)
        instances = tuple(instances or range(values.shape[0]))
        return DissimilarityMatrix(values=values, row_instances=instances, column_instances=instances)

    def test_single_matrix_identity(self):
        matrix = self.square([[0.0, 0.5], [0.5, 0.0]])
        joint = joint_average([matrix])
        assert np.array_equal(joint.values, matrix.values)

    def test_two_matrix_arithmetic(self):
        a = self.square([[0.0, 0.0], [0.0, 0.0]])
        b = self.square([[0.0, 1.0], [1.0, 0.0]])
        joint = joint_average([a, b])
        assert np.array_equal(joint.values, [[0.0, 0.5], [0.5, 0.0]])

    def test_five_views_match_naive_summation(self):
        rng = np.random.default_rng(7)
        mats = []
        for _ in range(5):
            v = rng.uniform(size=(6, 6))
            v = (v + v.T) / 2
            np.fill_diagonal(v, 0.0)
            mats.append(self.square(v))
        joint = joint_average(mats)
        expected = np.zeros((6, 6))
        for i in range(6):
            for j in range(6):
                total = 0.0
                for m in mats:
                    total += m.values[i, j]
                expected[i, j] = total / 5
        assert np.allclose(joint.values, expected, atol=1e-15)
        assert joint.validate() == []

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            joint_average([])

    def test_axis_mismatch_rejected(self):
        a = self.square([[0.0, 0.1], [0.1, 0.0]], instances=[0, 1])
        b = self.square([[0.0, 0.1], [0.1, 0.0]], instances=[2, 3])
        with pytest.raises(ValueError, match="different instance axes"):
            joint_average([a, b])
        c = self.square(np.zeros((3, 3)))
        with pytest.raises(ValueError, match="shape mismatch"):
            joint_average([a, c])


class TestSimilarity:
    def test_zero_matrix_becomes_ones(self):
        d = DissimilarityMatrix(np.zeros((2, 2)), (0, 1), (0, 1))
        assert np.array_equal(to_similarity(d).values, np.ones((2, 2)))

    def test_quarter_becomes_three_quarters(self):
        d = DissimilarityMatrix(np.array([[0.0, 0.25], [0.25, 0.0]]), (0, 1), (0, 1))
        s = to_similarity(d)
        assert s.values[0, 1] == 0.75
        assert np.all(np.diag(s.values) == 1.0)

    def test_double_flip_is_identity(self):
        rng = np.random.default_rng(8)
        v = rng.uniform(size=(4, 4))
        d = DissimilarityMatrix(v, tuple(range(4)), tuple(range(4)))
        flipped_twice = 1.0 - to_similarity(d).values
        assert np.allclose(flipped_twice, v, atol=1e-15)


class TestStatisticalCoherence:
    def test_within_class_less_than_between(self):
        rng = np.random.default_rng(9)
        x = np.vstack([rng.normal(0, 1, (15, 3)), rng.normal(5, 1, (15, 3))])
        y = np.array([0] * 15 + [1] * 15)
        forest = train_forest(x, y, ForestConfig(num_trees=50, seed=10))
        matrix = build_matrix(forest, x, x).values
        same = (y[:, None] == y[None, :]) & ~np.eye(30, dtype=bool)
        different = y[:, None] != y[None, :]
        assert matrix[same].mean() < matrix[different].mean()


class TestCsv:
    def test_roundtrip_exact(self, tmp_path):
        forest, x = random_forest_and_data(11)
        matrix = build_matrix(forest, x, x)
        path = tmp_path / "matrix.csv"
        save_matrix(matrix, path)
        loaded = load_matrix(path)
        assert loaded.row_instances == matrix.row_instances
        assert loaded.column_instances == matrix.column_instances
        assert np.array_equal(loaded.values, matrix.values)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_random_matrices_keep_invariants(seed):
    forest, x = random_forest_and_data(seed, max_trees=6, max_rows=12)
    matrix = build_matrix(forest, x, x)
    assert matrix.validate(num_trees=forest.num_trees) == []
