"""Experiment orchestration: configuration, training loop, comparisons and artifacts."""

from opr_trainer.harness.checkpoint import LoadedCheckpoint, load_checkpoint, save_checkpoint
from opr_trainer.harness.comparison import ComparisonResult, ComparisonRow, Variant, run_comparison
from opr_trainer.harness.experiment import ExperimentConfig, config_from_mapping, load_config
from opr_trainer.harness.metrics import MetricsRecord, MetricsWriter, export_plot_data, read_metrics
from opr_trainer.harness.runner import RunResult, run_experiment
from opr_trainer.harness.summary import RunSummary
from opr_trainer.harness.trainer import Trainer

__all__ = [
    "ComparisonResult",
    "ComparisonRow",
    "ExperimentConfig",
    "LoadedCheckpoint",
    "MetricsRecord",
    "MetricsWriter",
    "RunResult",
    "RunSummary",
    "Trainer",
    "Variant",
    "config_from_mapping",
    "export_plot_data",
    "load_checkpoint",
    "load_config",
    "read_metrics",
    "run_comparison",
    "run_experiment",
    "save_checkpoint",
]
