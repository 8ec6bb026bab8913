from pathlib import Path
from typing import Optional

import typer

from opr_cli.utils import console, handle_errors
from opr_trainer.harness import load_config, run_experiment


def train(
    config: Path = typer.Option(..., "--config", "-c", help="Experiment config file"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the master seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Run directory"),
    resume: bool = typer.Option(False, "--resume", help="Continue from the newest checkpoint in the run directory"),
) -> None:
    """Train one run and write metrics, checkpoints and a summary."""
    with handle_errors():
        experiment = load_config(config)
        if seed is not None:
            experiment = experiment.model_copy(update={"seed": seed})
        result = run_experiment(experiment, output_dir=out, resume=resume)
        summary = result.summary
        console.print(f"[green]Run complete: {result.run_dir}[/green]")
        console.print(f"Steps: {summary.env_steps}  Episodes: {summary.episodes}")
        console.print(f"Final mean return: {summary.final_mean_return}")
        if summary.success_threshold is not None:
            console.print(f"Steps to threshold {summary.success_threshold}: {summary.steps_to_threshold}")
