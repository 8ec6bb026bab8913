"""Exception hierarchy shared by every opr_trainer module."""

from typing import Optional


class OprLabError(Exception):
    """Base class for all library errors."""


class ShapeError(OprLabError, ValueError):
    """Array dimensions do not line up."""


class DomainError(OprLabError, ValueError):
    """An input lies outside the domain an operation accepts."""


class NumericalError(OprLabError, ArithmeticError):
    """A NaN or Inf was produced or supplied."""

    def __init__(self, message: str, component: Optional[str] = None) -> None:
        super().__init__(message)
        self.component = component


class EnvUsageError(OprLabError, RuntimeError):
    """An environment was driven outside its lifecycle."""


class UnsupportedError(OprLabError):
    """The requested computation is not supported for this input."""


class ConfigError(OprLabError):
    """Experiment configuration could not be loaded or validated."""


class CheckpointError(OprLabError):
    """A checkpoint could not be read back."""

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class MetricsFormatError(OprLabError):
    """A metrics file line could not be parsed."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ComparisonError(OprLabError):
    """One run of a paired comparison failed."""

    def __init__(self, message: str, run_name: str) -> None:
        super().__init__(f"{run_name}: {message}")
        self.run_name = run_name
