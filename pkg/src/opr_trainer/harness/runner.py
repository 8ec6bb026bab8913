"""Single-run orchestration: run directory layout, checkpoints, failure records and summaries."""

import json
import logging
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from opr_trainer.config import settings
from opr_trainer.envs import EnvConfig, optimal_return
from opr_trainer.errors import NumericalError, UnsupportedError
from opr_trainer.harness.callbacks import EventLogCallback, HardwareMonitorCallback, ProgressCallback, TrainerCallback
from opr_trainer.harness.callbacks.base import EventFn
from opr_trainer.harness.checkpoint import (
    checkpoint_path,
    list_checkpoints,
    load_checkpoint,
    prune_checkpoints,
    save_checkpoint,
)
from opr_trainer.harness.experiment import ExperimentConfig
from opr_trainer.harness.metrics import MetricsWriter, truncate_metrics
from opr_trainer.harness.summary import RunSummary, summarize
from opr_trainer.harness.trainer import Trainer

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
METRICS_FILE = "metrics.jsonl"
EVENTS_FILE = "events.jsonl"
SUMMARY_FILE = "summary.json"
FAILURE_FILE = "failure.json"


@dataclass(slots=True)
class RunResult:
    run_dir: Path
    summary: RunSummary


def log_event(level: str, msg: str, data: Dict[str, Any]) -> None:
    """Default event sink: forward callback messages to the module logger."""
    logger.log(logging.getLevelName(level.upper()), msg)


@lru_cache(maxsize=32)
def _optimal_return_cached(env_json: str) -> Optional[float]:
    env = EnvConfig.model_validate_json(env_json).build()
    try:
        return optimal_return(env)
    except UnsupportedError as e:
        logger.warning(f"No success threshold: {e}")
        return None


def resolve_success_threshold(config: ExperimentConfig) -> Optional[float]:
    """The configured threshold, else the planner's optimal return less ``success_tolerance`` of its magnitude."""
    if config.success_threshold is not None:
        return config.success_threshold
    optimum = _optimal_return_cached(config.env.model_dump_json())
    if optimum is None:
        return None
    return optimum - config.success_tolerance * abs(optimum)


def resolve_run_dir(config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None) -> Path:
    if output_dir is not None:
        return Path(output_dir)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(settings.runs_dir) / f"{config.run_name}-seed{config.seed}"


def _prepare_run_dir(run_dir: Path) -> None:
    """Create the directory and prove it is writable; raises OSError before any training."""
    run_dir.mkdir(parents=True, exist_ok=True)
    probe = run_dir / ".write-probe"
    probe.write_text("ok", encoding="utf-8")
    probe.unlink()


def _write_json(path: Path, data: Any) -> None:
    path.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[Union[str, Path]] = None,
    resume: bool = False,
    callbacks: Optional[Sequence[TrainerCallback]] = None,
    event_cb: Optional[EventFn] = log_event,
) -> RunResult:
    """Train one run to ``total_steps`` and write its artifacts.

    A NumericalError halts the run after writing ``failure.json`` and is re-raised.
    """
    run_dir = resolve_run_dir(config, output_dir)
    _prepare_run_dir(run_dir)
    (run_dir / CONFIG_FILE).write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")

    trainer = Trainer(config, success_threshold=resolve_success_threshold(config))
    resumed_from: Optional[int] = None
    if resume:
        existing = list_checkpoints(run_dir)
        if existing:
            trainer.restore(load_checkpoint(existing[-1]))
            resumed_from = trainer.update_index
            truncate_metrics(run_dir / METRICS_FILE, trainer.update_index)
        else:
            logger.info(f"No checkpoint in {run_dir}; starting from scratch")

    active: List[TrainerCallback] = list(callbacks) if callbacks is not None else []
    if callbacks is None:
        active = [
            ProgressCallback(event_cb),
            EventLogCallback(run_dir / EVENTS_FILE),
            HardwareMonitorCallback(event_cb),
        ]
    for cb in active:
        cb.on_train_begin(trainer, resumed_from)

    t0 = time.time()
    with MetricsWriter(run_dir / METRICS_FILE, append=resumed_from is not None) as writer:
        while not trainer.finished:
            try:
                wall_clock = time.time() - t0 if settings.metrics_wall_clock else None
                record = trainer.train_update(wall_clock_s=wall_clock)
            except NumericalError as e:
                logger.error(f"Run {config.run_name} halted at update {trainer.update_index}: {e}")
                _write_json(
                    run_dir / FAILURE_FILE,
                    {
                        "error": str(e),
                        "component": e.component,
                        "update_index": trainer.update_index,
                        "env_steps": trainer.env_steps,
                    },
                )
                for cb in active:
                    cb.on_failure(trainer, e)
                raise
            writer.write(record)
            for cb in active:
                cb.on_update_end(trainer, record)

            interval = config.checkpoint_interval
            if interval and (trainer.update_index % interval == 0 or trainer.finished):
                path = save_checkpoint(
                    checkpoint_path(run_dir, trainer.update_index),
                    trainer.params,
                    trainer.optimizer,
                    trainer.snapshot(),
                )
                prune_checkpoints(run_dir, settings.max_checkpoints)
                for cb in active:
                    cb.on_checkpoint(trainer, str(path))

    summary = summarize(trainer)
    (run_dir / SUMMARY_FILE).write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    for cb in active:
        cb.on_train_end(trainer, summary)
    logger.info(f"Run {config.run_name} complete: {summary.env_steps} steps, {summary.episodes} episodes")
    return RunResult(run_dir, summary)
