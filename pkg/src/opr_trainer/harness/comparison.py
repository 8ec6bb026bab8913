"""Paired PPO versus PPO+OPR comparisons over matched seeds."""

import json
import logging
from concurrent.futures import Future, ProcessPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from opr_trainer.errors import ComparisonError, ConfigError
from opr_trainer.harness.experiment import ExperimentConfig
from opr_trainer.harness.runner import resolve_run_dir, resolve_success_threshold, run_experiment
from opr_trainer.harness.summary import RunSummary

logger = logging.getLogger(__name__)

COMPARISON_FILE = "comparison.json"
COMPARED_METRICS = ("final_mean_return", "auc", "steps_to_threshold")


class Variant(str, Enum):
    PPO = "ppo"
    OPR = "opr"


class ComparisonRow(BaseModel):
    seed: int
    variant: Variant
    run_dir: str
    final_mean_return: Optional[float] = None
    auc: Optional[float] = None
    peak_mean_return: Optional[float] = None
    steps_to_threshold: Optional[int] = None
    reached_threshold: bool = False
    entropy_collapse_step: Optional[int] = None


class PairedDifference(BaseModel):
    """OPR minus PPO for one seed; null when either side is undefined."""

    seed: int
    final_mean_return: Optional[float] = None
    auc: Optional[float] = None
    steps_to_threshold: Optional[float] = None


class AggregateStat(BaseModel):
    count: int = Field(..., ge=0, description="Runs with a defined value")
    median: Optional[float] = None
    q25: Optional[float] = None
    q75: Optional[float] = None
    iqr: Optional[float] = None


class ComparisonResult(BaseModel):
    status: str = Field(default="running", description="running, completed or failed")
    seeds: List[int]
    rows: List[ComparisonRow] = Field(default_factory=list)
    differences: List[PairedDifference] = Field(default_factory=list)
    aggregates: Dict[str, Dict[str, AggregateStat]] = Field(default_factory=dict)
    reached_threshold: Dict[str, int] = Field(default_factory=dict)
    error: Optional[str] = None

    def row(self, seed: int, variant: Variant) -> Optional[ComparisonRow]:
        return next((r for r in self.rows if r.seed == seed and r.variant == variant), None)


def aggregate(values: Sequence[Optional[float]]) -> AggregateStat:
    """Median and interquartile range over the defined values."""
    defined = np.array([v for v in values if v is not None], dtype=np.float64)
    if defined.size == 0:
        return AggregateStat(count=0)
    q25, median, q75 = (float(q) for q in np.percentile(defined, [25, 50, 75]))
    return AggregateStat(count=int(defined.size), median=median, q25=q25, q75=q75, iqr=q75 - q25)


def _difference(a: Optional[float], b: Optional[float]) -> Optional[float]:
    return None if a is None or b is None else float(a) - float(b)


def _finalize(result: ComparisonResult) -> None:
    result.differences = []
    for seed in result.seeds:
        ppo, opr = result.row(seed, Variant.PPO), result.row(seed, Variant.OPR)
        if ppo is None or opr is None:
            continue
        result.differences.append(
            PairedDifference(
                seed=seed,
                final_mean_return=_difference(opr.final_mean_return, ppo.final_mean_return),
                auc=_difference(opr.auc, ppo.auc),
                steps_to_threshold=_difference(opr.steps_to_threshold, ppo.steps_to_threshold),
            )
        )
    result.aggregates = {
        variant.value: {
            metric: aggregate([getattr(r, metric) for r in result.rows if r.variant == variant])
            for metric in COMPARED_METRICS
        }
        for variant in Variant
    }
    result.reached_threshold = {
        variant.value: sum(r.reached_threshold for r in result.rows if r.variant == variant) for variant in Variant
    }


def _write(result: ComparisonResult, out_dir: Path) -> None:
    _finalize(result)
    (out_dir / COMPARISON_FILE).write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")


def variant_config(base: ExperimentConfig, seed: int, variant: Variant) -> ExperimentConfig:
    """Copy of ``base`` for one seed; the PPO variant only flips the OPR master switch."""
    opr = base.opr.model_copy(update={"opr_enabled": variant == Variant.OPR})
    return base.model_copy(update={"seed": seed, "opr": opr, "run_name": f"{variant.value}-seed{seed}"})


def _run_one(config_json: str, run_dir: str) -> str:
    """Process-pool entry point; returns the summary as JSON."""
    config = ExperimentConfig.model_validate_json(config_json)
    return run_experiment(config, output_dir=run_dir).summary.model_dump_json()


def _row(seed: int, variant: Variant, run_dir: Path, summary: RunSummary) -> ComparisonRow:
    return ComparisonRow(
        seed=seed,
        variant=variant,
        run_dir=str(run_dir),
        final_mean_return=summary.final_mean_return,
        auc=summary.auc,
        peak_mean_return=summary.peak_mean_return,
        steps_to_threshold=summary.steps_to_threshold,
        reached_threshold=summary.reached_threshold,
        entropy_collapse_step=summary.entropy_collapse_step,
    )


def run_comparison(
    base_config: ExperimentConfig,
    seeds: Optional[Sequence[int]] = None,
    output_dir: Optional[Union[str, Path]] = None,
    max_workers: int = 1,
) -> ComparisonResult:
    """Run plain PPO and PPO+OPR on every seed with identical environment seed streams.

    ``comparison.json`` is rewritten after each finished run. A failed run marks the comparison
    failed, keeps the rows gathered so far and raises ComparisonError.
    """
    seed_list = list(seeds) if seeds is not None else list(base_config.seeds)
    if len(seed_list) < 2:
        raise ConfigError(f"a comparison needs at least two seeds, got {seed_list}")
    if len(set(seed_list)) != len(seed_list):
        raise ConfigError(f"duplicate seeds in {seed_list}")

    out_dir = Path(output_dir) if output_dir is not None else resolve_run_dir(base_config).parent / "comparison"
    out_dir.mkdir(parents=True, exist_ok=True)
    # one planner call for every run
    threshold = resolve_success_threshold(base_config)
    base = base_config.model_copy(update={"success_threshold": threshold})

    jobs: List[Tuple[int, Variant, ExperimentConfig, Path]] = []
    for seed in seed_list:
        for variant in (Variant.PPO, Variant.OPR):
            config = variant_config(base, seed, variant)
            jobs.append((seed, variant, config, out_dir / config.run_name))

    result = ComparisonResult(seeds=seed_list)
    _write(result, out_dir)
    logger.info(f"Comparing {len(seed_list)} seeds ({len(jobs)} runs) in {out_dir}")

    def record(seed: int, variant: Variant, run_dir: Path, summary: RunSummary) -> None:
        result.rows.append(_row(seed, variant, run_dir, summary))
        _write(result, out_dir)

    def fail(run_name: str, error: BaseException) -> ComparisonError:
        result.status = "failed"
        result.error = f"{run_name}: {error}"
        _write(result, out_dir)
        logger.error(f"Comparison aborted by {run_name}: {error}")
        return ComparisonError(str(error), run_name)

    if max_workers <= 1:
        for seed, variant, config, run_dir in jobs:
            try:
                summary = run_experiment(config, output_dir=run_dir).summary
            except Exception as e:
                raise fail(config.run_name, e) from e
            record(seed, variant, run_dir, summary)
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures: List[Future[str]] = [
                pool.submit(_run_one, config.model_dump_json(), str(run_dir)) for _, _, config, run_dir in jobs
            ]
            for (seed, variant, config, run_dir), future in zip(jobs, futures):
                try:
                    summary = RunSummary.model_validate_json(future.result())
                except Exception as e:
                    for pending in futures:
                        pending.cancel()
                    raise fail(config.run_name, e) from e
                record(seed, variant, run_dir, summary)

    result.status = "completed"
    _write(result, out_dir)
    return result


def load_comparison(path: Union[str, Path]) -> ComparisonResult:
    return ComparisonResult.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
