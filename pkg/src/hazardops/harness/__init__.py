"""Dataset construction, error metrics, evaluation and reporting."""

from hazardops.harness.dataset import DatasetConfig, SampleSet, build_dataset, sample_seeds, split_assignment
from hazardops.harness.evaluate import MetricsReport, evaluate, median_time
from hazardops.harness.metrics import abs_err, mse, per_sample_mse, per_sample_rel_l2, rel_l2
from hazardops.harness.report import emit_report, format_table, read_metrics_csv

__all__ = [
    "DatasetConfig", "MetricsReport", "SampleSet", "abs_err", "build_dataset", "emit_report", "evaluate",
    "format_table", "median_time", "mse", "per_sample_mse", "per_sample_rel_l2", "read_metrics_csv", "rel_l2",
    "sample_seeds", "split_assignment",
]
