import logging
from contextlib import contextmanager
from typing import Iterator, Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from opr_trainer.config import settings
from opr_trainer.errors import CheckpointError, ComparisonError, ConfigError, MetricsFormatError, NumericalError

console = Console()

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def setup_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(level=(level or settings.log_level).upper(), format=settings.log_format)


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, ComparisonError) and error.__cause__ is not None:
        return exit_code_for(error.__cause__)
    if isinstance(error, (ConfigError, ValidationError)):
        return EXIT_CONFIG
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (OSError, CheckpointError, MetricsFormatError)):
        return EXIT_IO
    return 1


@contextmanager
def handle_errors() -> Iterator[None]:
    """Print library errors and exit with the matching code."""
    try:
        yield
    except typer.Exit:
        raise
    except Exception as e:
        console.print(f"[red]error: {e}[/red]")
        raise typer.Exit(code=exit_code_for(e)) from e
