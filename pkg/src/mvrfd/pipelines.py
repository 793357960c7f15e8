"""The six end-to-end classification methods compared by the benchmark.

Early integration: ReliefF or SVM-RFE feature selection on the concatenated
views, then a random forest. Intermediate integration: the joint per-view
forest dissimilarity matrix used either as an SVM kernel (similarity) or as
a new training table for a forest. Late integration: per-view forests, on
raw features or on per-view dissimilarity tables, combined by plurality
vote.

Every stochastic component inside a pipeline derives its seed from
``config.seed`` plus a fixed component tag, so results are identical no
matter which methods run, in which order, or how work is parallelized.
Per-view forests and dissimilarity matrices are cached in a
:class:`SharedState` and reused by every method that needs them within one
split.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dataset import MultiViewDataset, concatenate_views
from .dissimilarity import DissimilarityMatrix, build_matrix, joint_average, to_similarity
from .feature_selection import apply_selection, relief_scores, select_count, svmrfe_rank
from .forest import Forest, ForestConfig, predict_forest_batch, train_forest
from .seeding import child_seed
from .svm import KernelGrid, predict_svm_batch, select_c, train_svm

# Component tags for seed derivation. Raw-feature forests share one seed per
# split (they see different data per view); dissimilarity-space forests share
# another, which also makes single-view late integration coincide exactly
# with its intermediate counterpart.
_TAG_RAW_FOREST = "raw-feature-forest"
_TAG_DSPACE_FOREST = "dissimilarity-space-forest"
_TAG_C_SELECTION = "c-selection"


class MethodId(enum.Enum):
    """Closed enumeration of the compared methods."""

    RELF_RF = "relf_rf"
    SVMRFE_RF = "svmrfe_rf"
    RFSVM = "rfsvm"
    RFDIS = "rfdis"
    LATE_RF = "late_rf"
    LATE_RFDIS = "late_rfdis"

    @classmethod
    def from_token(cls, token: str) -> "MethodId":
        token = token.strip().lower()
        for method in cls:
            if method.value == token:
                return method
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown method {token!r}; choose from: {valid}")


ALL_METHODS = tuple(MethodId)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs shared by all pipelines; defaults reproduce the benchmark
    protocol (500 trees, C grid 0.01..1000, ReliefF with 10 neighbors)."""

    num_trees: int = 500
    c_grid: KernelGrid = KernelGrid()
    relief_neighbors: int = 10
    seed: int = 0
    n_jobs: int = 1


@dataclass(frozen=True)
class PipelineResult:
    method: MethodId
    predictions: np.ndarray  # encoded class per test instance
    accuracy: float
    metadata: dict = field(compare=False)


class SharedState:
    """Per-split cache of view forests and dissimilarity matrices.

    The cached objects are pure functions of (dataset, train indices,
    config), so sharing them across methods cannot change any result; it
    only avoids repeated work.
    """

    def __init__(self, ds: MultiViewDataset, split, config: PipelineConfig):
        self.ds = ds
        self.config = config
        self.train_idx = np.asarray(split[0], dtype=np.int64)
        self.test_idx = np.asarray(split[1], dtype=np.int64)
        self._view_forests: dict[int, Forest] = {}
        self._train_matrices: dict[int, DissimilarityMatrix] = {}
        self._test_matrices: dict[int, DissimilarityMatrix] = {}

    @property
    def train_labels(self) -> np.ndarray:
        return self.ds.labels[self.train_idx]

    def view_forest(self, q: int) -> Forest:
        if q not in self._view_forests:
            x_train = self.ds.views[q].features[self.train_idx]
            forest_config = ForestConfig(
                num_trees=self.config.num_trees,
                seed=child_seed(self.config.seed, _TAG_RAW_FOREST),
            )
            self._view_forests[q] = train_forest(
                x_train, self.train_labels, forest_config, n_jobs=self.config.n_jobs
            )
        return self._view_forests[q]

    def has_view_forest(self, q: int) -> bool:
        return q in self._view_forests

    def train_matrix(self, q: int) -> DissimilarityMatrix:
        if q not in self._train_matrices:
            x_train = self.ds.views[q].features[self.train_idx]
            self._train_matrices[q] = build_matrix(
                self.view_forest(q), x_train, x_train,
                row_instances=self.train_idx, column_instances=self.train_idx,
            )
        return self._train_matrices[q]

    def test_matrix(self, q: int) -> DissimilarityMatrix:
        if q not in self._test_matrices:
            x_train = self.ds.views[q].features[self.train_idx]
            x_test = self.ds.views[q].features[self.test_idx]
            self._test_matrices[q] = build_matrix(
                self.view_forest(q), x_test, x_train,
                row_instances=self.test_idx, column_instances=self.train_idx,
            )
        return self._test_matrices[q]

    def joint_train_matrix(self) -> DissimilarityMatrix:
        return joint_average([self.train_matrix(q) for q in range(self.ds.n_views)])

    def joint_test_matrix(self) -> DissimilarityMatrix:
        return joint_average([self.test_matrix(q) for q in range(self.ds.n_views)])


def _accuracy(predictions: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean(predictions == truth))


def _plurality_vote(per_view_predictions: list[np.ndarray], n_classes: int) -> np.ndarray:
    """Hard plurality vote across views; ties go to the lowest class index."""
    votes = np.zeros((len(per_view_predictions[0]), n_classes), dtype=np.int64)
    for predictions in per_view_predictions:
        votes[np.arange(len(predictions)), predictions] += 1
    return np.argmax(votes, axis=1)


def _selection_forest_config(config: PipelineConfig) -> ForestConfig:
    return ForestConfig(num_trees=config.num_trees, seed=child_seed(config.seed, _TAG_RAW_FOREST))


def _dspace_forest_config(config: PipelineConfig) -> ForestConfig:
    return ForestConfig(num_trees=config.num_trees, seed=child_seed(config.seed, _TAG_DSPACE_FOREST))


def _run_selection_pipeline(method, rank_features, ds, split, config):
    train_idx = np.asarray(split[0], dtype=np.int64)
    test_idx = np.asarray(split[1], dtype=np.int64)
    concatenated = concatenate_views(ds).features
    x_train = concatenated[train_idx]
    x_test = concatenated[test_idx]
    y_train = ds.labels[train_idx]
    ranking, extra = rank_features(x_train, y_train, config)
    count = select_count(x_train.shape[1])
    forest = train_forest(
        apply_selection(x_train, ranking, count), y_train,
        _selection_forest_config(config), n_jobs=config.n_jobs,
    )
    predictions = predict_forest_batch(forest, apply_selection(x_test, ranking, count))
    metadata = {
        "selected_count": count,
        "selected_features": tuple(int(f) for f in ranking.order[:count]),
        **extra,
    }
    return PipelineResult(
        method=method,
        predictions=predictions,
        accuracy=_accuracy(predictions, ds.labels[test_idx]),
        metadata=metadata,
    )


def run_relf_rf(ds, split, config: PipelineConfig, shared: Optional[SharedState] = None) -> PipelineResult:
    """Concatenate views, keep the top ReliefF features, classify with a forest."""

    def rank(x_train, y_train, cfg):
        counts = np.bincount(y_train)
        counts = counts[counts > 0]
        k = min(cfg.relief_neighbors, int(counts.min()) - 1)
        if k < 1:
            raise ValueError("a training class has a single member; ReliefF needs at least 2")
        return relief_scores(x_train, y_train, k), {"relief_neighbors": k}

    return _run_selection_pipeline(MethodId.RELF_RF, rank, ds, split, config)


def run_svmrfe_rf(ds, split, config: PipelineConfig, shared: Optional[SharedState] = None) -> PipelineResult:
    """Concatenate views, keep the top SVM-RFE features, classify with a forest."""

    def rank(x_train, y_train, cfg):
        return svmrfe_rank(x_train, y_train), {}

    return _run_selection_pipeline(MethodId.SVMRFE_RF, rank, ds, split, config)


def run_rfsvm(ds, split, config: PipelineConfig, shared: Optional[SharedState] = None) -> PipelineResult:
    """SVM on the joint similarity kernel derived from per-view forests."""
    shared = shared or SharedState(ds, split, config)
    reused = all(shared.has_view_forest(q) for q in range(ds.n_views))
    y_train = shared.train_labels
    kernel_train = to_similarity(shared.joint_train_matrix())
    chosen_c = select_c(
        kernel_train, y_train, config.c_grid, child_seed(config.seed, _TAG_C_SELECTION)
    )
    model = train_svm(kernel_train, y_train, chosen_c)
    kernel_test = to_similarity(shared.joint_test_matrix())
    predictions = predict_svm_batch(model, kernel_test.values)
    metadata = {
        "chosen_c": chosen_c,
        "support_count": int(len(model.support_indices)),
        "dual_coefficients": model.dual_coefficients,
        "biases": model.biases,
        "reused_shared_forests": reused,
    }
    return PipelineResult(
        method=MethodId.RFSVM,
        predictions=predictions,
        accuracy=_accuracy(predictions, ds.labels[shared.test_idx]),
        metadata=metadata,
    )


def run_rfdis(ds, split, config: PipelineConfig, shared: Optional[SharedState] = None) -> PipelineResult:
    """Forest trained on joint dissimilarity rows as the new feature table."""
    shared = shared or SharedState(ds, split, config)
    reused = all(shared.has_view_forest(q) for q in range(ds.n_views))
    y_train = shared.train_labels
    train_table = shared.joint_train_matrix().values
    forest = train_forest(train_table, y_train, _dspace_forest_config(config), n_jobs=config.n_jobs)
    predictions = predict_forest_batch(forest, shared.joint_test_matrix().values)
    metadata = {
        "representation_width": train_table.shape[1],
        "reused_shared_forests": reused,
    }
    return PipelineResult(
        method=MethodId.RFDIS,
        predictions=predictions,
        accuracy=_accuracy(predictions, ds.labels[shared.test_idx]),
        metadata=metadata,
    )


def run_late_rf(ds, split, config: PipelineConfig, shared: Optional[SharedState] = None) -> PipelineResult:
    """Per-view forests on raw features, combined by plurality vote."""
    shared = shared or SharedState(ds, split, config)
    reused = all(shared.has_view_forest(q) for q in range(ds.n_views))
    per_view = []
    for q in range(ds.n_views):
        x_test = ds.views[q].features[shared.test_idx]
        per_view.append(predict_forest_batch(shared.view_forest(q), x_test))
    predictions = _plurality_vote(per_view, ds.n_classes)
    metadata = {
        "per_view_predictions": tuple(p.copy() for p in per_view),
        "reused_shared_forests": reused,
    }
    return PipelineResult(
        method=MethodId.LATE_RF,
        predictions=predictions,
        accuracy=_accuracy(predictions, ds.labels[shared.test_idx]),
        metadata=metadata,
    )


def run_late_rfdis(ds, split, config: PipelineConfig, shared: Optional[SharedState] = None) -> PipelineResult:
    """Per-view forests on per-view dissimilarity rows, plurality vote."""
    shared = shared or SharedState(ds, split, config)
    reused = all(shared.has_view_forest(q) for q in range(ds.n_views))
    y_train = shared.train_labels
    per_view = []
    for q in range(ds.n_views):
        forest = train_forest(
            shared.train_matrix(q).values, y_train,
            _dspace_forest_config(config), n_jobs=config.n_jobs,
        )
        per_view.append(predict_forest_batch(forest, shared.test_matrix(q).values))
    predictions = _plurality_vote(per_view, ds.n_classes)
    metadata = {
        "per_view_predictions": tuple(p.copy() for p in per_view),
        "reused_shared_forests": reused,
    }
    return PipelineResult(
        method=MethodId.LATE_RFDIS,
        predictions=predictions,
        accuracy=_accuracy(predictions, ds.labels[shared.test_idx]),
        metadata=metadata,
    )


_RUNNERS = {
    MethodId.RELF_RF: run_relf_rf,
    MethodId.SVMRFE_RF: run_svmrfe_rf,
    MethodId.RFSVM: run_rfsvm,
    MethodId.RFDIS: run_rfdis,
    MethodId.LATE_RF: run_late_rf,
    MethodId.LATE_RFDIS: run_late_rfdis,
}


def run_pipeline(
    method: MethodId,
    ds: MultiViewDataset,
    split,
    config: PipelineConfig,
    shared: Optional[SharedState] = None,
) -> PipelineResult:
    return _RUNNERS[method](ds, split, config, shared)


def repetition_config(config: PipelineConfig, repetition: int) -> PipelineConfig:
    """Config whose seed is specialized to one protocol repetition."""
    return replace(config, seed=child_seed(config.seed, "repetition", repetition))
