import numpy as np
import pytest

from mvrfd.dataset import MultiViewDataset, make_split_plan
from mvrfd.dissimilarity import build_matrix
from mvrfd.forest import ForestConfig, train_forest
from mvrfd.pipelines import (
    ALL_METHODS,
    MethodId,
    PipelineConfig,
    SharedState,
    run_late_rf,
    run_late_rfdis,
    run_pipeline,
    run_relf_rf,
    run_rfdis,
    run_rfsvm,
)
from mvrfd.seeding import child_seed
from mvrfd.svm import predict_svm_batch, select_c, train_svm
from mvrfd.synthetic import make_separable_dataset, make_synthetic_dataset

from conftest import build_dataset

CONFIG = PipelineConfig(num_trees=30, seed=13)


@pytest.fixture(scope="module")
def separable():
    ds = make_separable_dataset("pipe", seed=21)
    plan = make_split_plan(ds, 2, 0.5, seed=5)
    return ds, plan.repetitions[0]


class TestPerfectFixtures:
    def test_all_methods_perfect(self, separable):
        ds, split = separable
        shared = SharedState(ds, split, CONFIG)
        for method in ALL_METHODS:
            result = run_pipeline(method, ds, split, CONFIG, shared)
            assert result.accuracy == 1.0, method

    def test_relief_single_informative_feature(self):
        rng = np.random.default_rng(3)
        labels = np.array([0, 1] * 15)
        informative = np.where(labels == 0, -3.0, 3.0) + rng.normal(0, 0.1, 30)
        noise = rng.normal(size=(30, 7))
        view = np.column_stack([noise[:, :3], informative, noise[:, 3:]])
        ds = build_dataset("informative", [view], labels)
        split = (np.arange(16), np.arange(16, 30))
        result = run_relf_rf(ds, split, CONFIG)
        assert result.accuracy == 1.0
        assert 3 in result.metadata["selected_features"]


class TestIdentities:
    def test_duplicated_views_match_single_view_rfsvm(self):
        base = make_synthetic_dataset("dup", seed=31, n_instances=24, view_widths=(6,), signal=2.0)
        duplicated = MultiViewDataset(
            name="dup",
            views=(base.views[0], base.views[0]),
            labels=base.labels,
            class_names=base.class_names,
        )
        split = tuple(make_split_plan(base, 1, 0.5, seed=2).repetitions[0])
        single = run_rfsvm(base, split, CONFIG)
        double = run_rfsvm(duplicated, split, CONFIG)
        assert np.array_equal(single.predictions, double.predictions)
        assert single.metadata["chosen_c"] == double.metadata["chosen_c"]

    def test_late_rfdis_single_view_equals_rfdis(self):
        ds = make_synthetic_dataset("one-view", seed=32, n_instances=26, view_widths=(8,), signal=1.0)
        split = tuple(make_split_plan(ds, 1, 0.5, seed=3).repetitions[0])
        late = run_late_rfdis(ds, split, CONFIG)
        intermediate = run_rfdis(ds, split, CONFIG)
        assert np.array_equal(late.predictions, intermediate.predictions)

    def test_late_rf_identical_views_unanimous(self):
        base = make_synthetic_dataset("tri", seed=33, n_instances=24, view_widths=(5,), signal=2.0)
        tripled = MultiViewDataset(
            name="tri",
            views=(base.views[0],) * 3,
            labels=base.labels,
            class_names=base.class_names,
        )
        split = tuple(make_split_plan(base, 1, 0.5, seed=4).repetitions[0])
        result = run_late_rf(tripled, split, CONFIG)
        votes = result.metadata["per_view_predictions"]
        assert all(np.array_equal(votes[0], v) for v in votes[1:])
        assert np.array_equal(result.predictions, votes[0])

    def test_rfsvm_manual_composition(self):
        ds = make_synthetic_dataset("manual", seed=34, n_instances=20, view_widths=(4, 3), signal=1.5)
        split = tuple(make_split_plan(ds, 1, 0.5, seed=6).repetitions[0])
        train_idx, test_idx = split
        result = run_rfsvm(ds, split, CONFIG)
        y_train = ds.labels[train_idx]
        forest_config = ForestConfig(
            num_trees=CONFIG.num_trees, seed=child_seed(CONFIG.seed, "raw-feature-forest")
        )
        train_mats, test_mats = [], []
        for view in ds.views:
            forest = train_forest(view.features[train_idx], y_train, forest_config)
            train_mats.append(build_matrix(forest, view.features[train_idx], view.features[train_idx]).values)
            test_mats.append(build_matrix(forest, view.features[test_idx], view.features[train_idx]).values)
        joint_train = np.sum(train_mats, axis=0) / len(train_mats)
        joint_test = np.sum(test_mats, axis=0) / len(test_mats)
        chosen = select_c(1.0 - joint_train, y_train, CONFIG.c_grid, child_seed(CONFIG.seed, "c-selection"))
        model = train_svm(1.0 - joint_train, y_train, chosen)
        expected = predict_svm_batch(model, 1.0 - joint_test)
        assert chosen == result.metadata["chosen_c"]
        assert np.array_equal(expected, result.predictions)


class TestVoteTies:
    def test_two_disagreeing_views_pick_lowest_class(self):
        # View A carries the label; view B carries the inverted label, so on
        # crafted test instances the two votes disagree.
        view_a = np.array([[0.0], [0.0], [1.0], [1.0], [0.0], [1.0]])
        view_b = np.array([[1.0], [1.0], [0.0], [0.0], [0.0], [1.0]])
        labels = np.array([0, 0, 1, 1, 0, 1])
        ds = build_dataset("conflict", [view_a, view_b], labels)
        split = (np.array([0, 1, 2, 3]), np.array([4, 5]))
        result = run_late_rf(ds, split, PipelineConfig(num_trees=51, seed=9))
        votes = result.metadata["per_view_predictions"]
        # test instance 4: A says 0, B (inverted) says 1 -> tie -> class 0
        assert votes[0][0] == 0 and votes[1][0] == 1
        assert result.predictions[0] == 0
        # test instance 5: A says 1, B says 0 -> tie -> class 0
        assert votes[0][1] == 1 and votes[1][1] == 0
        assert result.predictions[1] == 0


class TestRfdis:
    def test_duplicate_training_row_as_test(self):
        rng = np.random.default_rng(35)
        labels = np.array([0] * 10 + [1] * 10)
        view = np.vstack([rng.normal(0, 1, (10, 3)), rng.normal(6, 1, (10, 3))])
        view = np.vstack([view, view[3], view[15]])  # 2 test copies of train rows
        labels = np.concatenate([labels, [0, 1]])
        ds = build_dataset("dupes", [view], labels)
        split = (np.arange(20), np.array([20, 21]))
        result = run_rfdis(ds, split, PipelineConfig(num_trees=100, seed=10))
        assert result.predictions.tolist() == [0, 1]

    def test_representation_width_is_train_size(self, separable):
        ds, split = separable
        result = run_rfdis(ds, split, CONFIG)
        assert result.metadata["representation_width"] == len(split[0])


class TestSharedState:
    def test_shared_equals_unshared(self, separable):
        ds, split = separable
        shared = SharedState(ds, split, CONFIG)
        for method in ALL_METHODS:
            with_cache = run_pipeline(method, ds, split, CONFIG, shared)
            without_cache = run_pipeline(method, ds, split, CONFIG, None)
            assert np.array_equal(with_cache.predictions, without_cache.predictions)

    def test_reuse_recorded(self, separable):
        ds, split = separable
        shared = SharedState(ds, split, CONFIG)
        first = run_rfsvm(ds, split, CONFIG, shared)
        second = run_rfdis(ds, split, CONFIG, shared)
        assert first.metadata["reused_shared_forests"] is False
        assert second.metadata["reused_shared_forests"] is True

    def test_rfsvm_and_rfdis_share_joint_matrix(self, separable):
        ds, split = separable
        shared = SharedState(ds, split, CONFIG)
        run_rfsvm(ds, split, CONFIG, shared)
        joint_before = shared.joint_train_matrix().values
        run_rfdis(ds, split, CONFIG, shared)
        joint_after = shared.joint_train_matrix().values
        assert np.array_equal(joint_before, joint_after)


class TestDeterminismAndLeakage:
    def test_rerun_identical(self, separable):
        ds, split = separable
        for method in ALL_METHODS:
            a = run_pipeline(method, ds, split, CONFIG)
            b = run_pipeline(method, ds, split, CONFIG)
            assert np.array_equal(a.predictions, b.predictions)
            assert a.accuracy == b.accuracy

    def test_method_order_irrelevant(self, separable):
        ds, split = separable
        forward = [run_pipeline(m, ds, split, CONFIG, SharedState(ds, split, CONFIG)) for m in ALL_METHODS]
        shared = SharedState(ds, split, CONFIG)
        backward = [run_pipeline(m, ds, split, CONFIG, shared) for m in reversed(ALL_METHODS)]
        for res in forward:
            twin = next(r for r in backward if r.method is res.method)
            assert np.array_equal(res.predictions, twin.predictions)

    def test_shuffled_test_labels_change_nothing_trained(self):
        ds = make_synthetic_dataset("leak", seed=36, n_instances=28, view_widths=(5, 4), signal=1.0)
        split = tuple(make_split_plan(ds, 1, 0.5, seed=8).repetitions[0])
        test_idx = split[1]
        mutated_labels = ds.labels.copy()
        mutated_labels[test_idx] = np.roll(mutated_labels[test_idx], 1)
        assert not np.array_equal(mutated_labels, ds.labels)
        mutated = MultiViewDataset(
            name=ds.name, views=ds.views, labels=mutated_labels, class_names=ds.class_names
        )
        for method in ALL_METHODS:
            original = run_pipeline(method, ds, split, CONFIG)
            shuffled = run_pipeline(method, mutated, split, CONFIG)
            assert np.array_equal(original.predictions, shuffled.predictions), method
            if "selected_features" in original.metadata:
                assert original.metadata["selected_features"] == shuffled.metadata["selected_features"]
            if "chosen_c" in original.metadata:
                assert original.metadata["chosen_c"] == shuffled.metadata["chosen_c"]
                assert np.array_equal(
                    original.metadata["dual_coefficients"], shuffled.metadata["dual_coefficients"]
                )


class TestMethodId:
    def test_token_roundtrip(self):
        for method in ALL_METHODS:
            assert MethodId.from_token(method.value) is method

    def test_unknown_token(self):
        with pytest.raises(ValueError, match="unknown method"):
            MethodId.from_token("boosting")
