from pathlib import Path
from typing import List, Optional

import typer
from rich.table import Table

from opr_cli.utils import console, handle_errors
from opr_trainer.errors import ConfigError
from opr_trainer.harness import ComparisonResult, Variant, load_config, run_comparison


def _parse_seeds(raw: Optional[str]) -> Optional[List[int]]:
    if raw is None:
        return None
    try:
        return [int(s) for s in raw.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigError(f"--seeds must be a comma-separated list of integers, got '{raw}'") from e


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4g}"


def _print(result: ComparisonResult) -> None:
    table = Table(title="PPO vs PPO+OPR")
    table.add_column("Seed", style="cyan")
    table.add_column("Variant")
    table.add_column("Final return", justify="right")
    table.add_column("AUC", justify="right")
    table.add_column("Steps to threshold", justify="right")
    for row in result.rows:
        table.add_row(
            str(row.seed),
            row.variant.value,
            _fmt(row.final_mean_return),
            _fmt(row.auc),
            "-" if row.steps_to_threshold is None else str(row.steps_to_threshold),
        )
    console.print(table)

    stats = Table(title="Median (IQR)")
    stats.add_column("Metric", style="cyan")
    for variant in Variant:
        stats.add_column(variant.value, justify="right")
    for metric in ("final_mean_return", "auc", "steps_to_threshold"):
        cells = []
        for variant in Variant:
            agg = result.aggregates[variant.value][metric]
            cells.append(f"{_fmt(agg.median)} ({_fmt(agg.iqr)})")
        stats.add_row(metric, *cells)
    stats.add_row("reached threshold", *(str(result.reached_threshold[v.value]) for v in Variant))
    console.print(stats)


def compare(
    config: Path = typer.Option(..., "--config", "-c", help="Experiment config file"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Comma-separated seeds, e.g. 0,1,2"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Comparison directory"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Parallel run processes"),
) -> None:
    """Run plain PPO and PPO+OPR on matched seeds and tabulate the paired results."""
    with handle_errors():
        experiment = load_config(config)
        result = run_comparison(experiment, seeds=_parse_seeds(seeds), output_dir=out, max_workers=workers)
        _print(result)
