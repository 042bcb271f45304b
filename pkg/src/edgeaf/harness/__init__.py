"""Experiment harness: datasets, cross-validation, sweeps, profiling and the CLI."""
from .cv import record_folds, stratified_folds, train_test_pairs
from .dataset import (CorpusSpec, FeatureDataset, build_feature_dataset, load_record_dir,
                      read_feature_csv, synthetic_corpus, write_feature_csv, write_record_dir)
from .metrics import UNDEFINED, compute_metrics, confusion, mean_metrics
from .plan import ExperimentPlan, RunReport, parse_subset_expr, run_plan
from .profile import ProfileReport, profile_pipeline

__all__ = [
    "CorpusSpec", "ExperimentPlan", "FeatureDataset", "ProfileReport", "RunReport", "UNDEFINED",
    "build_feature_dataset", "compute_metrics", "confusion", "load_record_dir", "mean_metrics",
    "parse_subset_expr", "profile_pipeline", "read_feature_csv", "record_folds", "run_plan",
    "stratified_folds", "synthetic_corpus", "train_test_pairs", "write_feature_csv",
    "write_record_dir",
]
