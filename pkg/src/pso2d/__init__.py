"""Two-dimensional (cardinality x feature) particle swarm learning for wrapper feature selection."""
from .algorithms import (ALGORITHMS, BPSOParams, CHBPSO_DEFAULTS, RunResult, SwarmState, Topology,
                         nbest_of, run_2d_gpso, run_2d_lpso, run_2d_upso, run_bpso, run_chbpso)
from .classifiers import ClassifierKind, error_rate, knn_classify, nb_classify
from .criterion import CriterionContext
from .dataset import (Dataset, DatasetError, FoldAssignment, impute_missing, load_dataset,
                      normalize_minmax, project, stratified_folds)
from .experiment import AlgorithmSpec, DataSource, ExperimentSpec, emit_report, load_report, load_spec, run_experiment
from .learning2d import SwarmParams
from .metrics import cardinality_reduction, paired_t_test, performance_improvement, rank_algorithms

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "AlgorithmSpec", "DataSource", "BPSOParams", "CHBPSO_DEFAULTS", "ClassifierKind", "CriterionContext", "Dataset",
    "DatasetError", "ExperimentSpec", "FoldAssignment", "RunResult", "SwarmParams", "SwarmState",
    "Topology", "cardinality_reduction", "emit_report", "error_rate", "impute_missing",
    "knn_classify", "load_dataset", "load_report", "load_spec", "nb_classify", "nbest_of",
    "normalize_minmax", "paired_t_test", "performance_improvement", "project", "rank_algorithms",
    "run_2d_gpso", "run_2d_lpso", "run_2d_upso", "run_bpso", "run_chbpso", "run_experiment",
    "stratified_folds",
]
