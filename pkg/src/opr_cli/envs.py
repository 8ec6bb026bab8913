import typer
from rich.table import Table

from opr_cli.utils import console, handle_errors
from opr_trainer.envs import list_envs, make_env


def show_envs(
    details: bool = typer.Option(False, "--details", "-d", help="Show default sizes of each environment"),
) -> None:
    """List registered environments."""
    with handle_errors():
        if not details:
            for name in list_envs():
                console.print(name)
            return
        table = Table(title="Environments")
        table.add_column("Name", style="cyan")
        table.add_column("Observation", justify="right")
        table.add_column("Actions", justify="right")
        table.add_column("Horizon", justify="right")
        for name in list_envs():
            spec = make_env(name).spec
            table.add_row(name, str(spec.observation_dim), str(spec.action_count), str(spec.max_episode_steps))
        console.print(table)
