"""Multi-view classification via random-forest dissimilarity, with benchmark tooling."""

__version__ = "0.1.0"

from .dataset import (
    MultiViewDataset,
    SplitPlan,
    View,
    concatenate_views,
    load_dataset,
    make_split_plan,
    save_dataset,
)
from .dissimilarity import (
    DissimilarityMatrix,
    SimilarityMatrix,
    build_matrix,
    forest_dissimilarity,
    joint_average,
    to_similarity,
    tree_dissimilarity,
)
from .evaluation import (
    EvaluationReport,
    ProtocolRun,
    SignTestResult,
    average_rank,
    build_report,
    run_protocol,
    sign_test,
    summarize,
)
from .feature_selection import (
    FeatureRanking,
    apply_selection,
    relief_scores,
    select_count,
    svmrfe_rank,
)
from .forest import (
    Forest,
    ForestConfig,
    Tree,
    leaf_index,
    load_forest,
    predict_forest,
    save_forest,
    train_forest,
)
from .pipelines import (
    ALL_METHODS,
    MethodId,
    PipelineConfig,
    PipelineResult,
    SharedState,
    run_late_rf,
    run_late_rfdis,
    run_pipeline,
    run_relf_rf,
    run_rfdis,
    run_rfsvm,
    run_svmrfe_rf,
)
from .svm import KernelGrid, SvmModel, predict_svm, select_c, train_svm

__all__ = [name for name in dir() if not name.startswith("_")]
