"""OPR Lab CLI - Main entry point."""

import typer

from opr_cli.compare import compare
from opr_cli.envs import show_envs
from opr_cli.export import export
from opr_cli.train import train
from opr_cli.utils import setup_logging

app = typer.Typer(
    help="OPR Lab - PPO with Optimistic Policy Regularization on desk-scale environments",
    no_args_is_help=True,
)

app.command(name="train")(train)
app.command(name="compare")(compare)
app.command(name="export")(export)
app.command(name="list-envs")(show_envs)


def main() -> None:
    """Main entry point for the CLI."""
    setup_logging()
    app()


if __name__ == "__main__":
    main()
