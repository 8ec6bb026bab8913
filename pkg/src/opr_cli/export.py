from pathlib import Path
from typing import Optional

import typer

from opr_cli.utils import console, handle_errors
from opr_trainer.harness import export_plot_data


def export(
    metrics: Path = typer.Option(..., "--metrics", "-m", help="metrics.jsonl of a run"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Directory for the CSV tables"),
) -> None:
    """Write one env_steps/value CSV table per metric."""
    with handle_errors():
        tables = export_plot_data(metrics, out)
        directory = next(iter(tables.values())).parent if tables else out
        console.print(f"[green]Wrote {len(tables)} tables to {directory}[/green]")
