"""Per-update metrics records, the append-only metrics log and plot-data export."""

import csv
import json
import logging
from pathlib import Path
from types import TracebackType
from typing import Dict, List, Optional, Type, Union

from pydantic import BaseModel, Field, ValidationError

from opr_trainer.errors import MetricsFormatError

logger = logging.getLogger(__name__)


class MetricsRecord(BaseModel):
    """One line of ``metrics.jsonl``.

    Returns are raw (unshaped) episodic returns of the episodes that finished during the update.
    """

    update_index: int = Field(..., ge=0)
    env_steps: int = Field(..., ge=0, description="Environment steps consumed so far")
    episodes: int = Field(..., ge=0, description="Episodes finished during this update")
    mean_return: Optional[float] = None
    max_return: Optional[float] = None
    policy_entropy: float = Field(..., description="Mean entropy of the acting policy over the rollout")
    surrogate_loss: float
    value_loss: float
    entropy_term: float
    bc_loss: float
    total_loss: float
    clip_fraction: float
    grad_norm: float
    learning_rate: float
    bc_applied: bool
    buffer_occupancy: int
    buffer_episodes: int
    threshold: Optional[float] = Field(None, description="Current admission threshold; null while undefined")
    mean_abs_delta: float = Field(..., description="Mean bounded log-ratio over matched rollout transitions")
    match_fraction: float = Field(..., description="Share of rollout transitions found in the buffer lookup")
    wall_clock_s: Optional[float] = None

    def to_line(self) -> str:
        exclude = {"wall_clock_s"} if self.wall_clock_s is None else None
        return self.model_dump_json(exclude=exclude)


PLOT_FIELDS: List[str] = [name for name in MetricsRecord.model_fields if name not in ("update_index", "env_steps")]


class MetricsWriter:
    """Appends records to a metrics file, flushing after each line."""

    def __init__(self, path: Union[str, Path], append: bool = False) -> None:
        self.path = Path(path)
        self._file = self.path.open("a" if append else "w", encoding="utf-8")
        self._last_steps: Optional[int] = None

    def write(self, record: MetricsRecord) -> None:
        if self._last_steps is not None and record.env_steps <= self._last_steps:
            raise ValueError(f"env_steps must increase: {record.env_steps} after {self._last_steps}")
        self._file.write(record.to_line() + "\n")
        self._file.flush()
        self._last_steps = record.env_steps

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        self.close()


def read_metrics(path: Union[str, Path]) -> List[MetricsRecord]:
    """Parse a metrics file; a malformed line raises MetricsFormatError with its 1-based number."""
    records: List[MetricsRecord] = []
    with Path(path).open(encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = MetricsRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise MetricsFormatError(str(e).splitlines()[0], line_number) from e
            if records and record.env_steps <= records[-1].env_steps:
                raise MetricsFormatError("env_steps does not increase", line_number)
            records.append(record)
    return records


def truncate_metrics(path: Union[str, Path], keep_updates: int) -> None:
    """Drop records of updates at or after ``keep_updates``; used when resuming from a checkpoint."""
    metrics_path = Path(path)
    if not metrics_path.exists():
        return
    kept = [r for r in read_metrics(metrics_path) if r.update_index < keep_updates]
    metrics_path.write_text("".join(r.to_line() + "\n" for r in kept), encoding="utf-8")


def export_plot_data(
    metrics_path: Union[str, Path], output_dir: Optional[Union[str, Path]] = None
) -> Dict[str, Path]:
    """Write one ``env_steps,<metric>`` CSV per metric; returns metric name to file path.

    Null values become empty cells.
    """
    records = read_metrics(metrics_path)
    out = Path(output_dir) if output_dir is not None else Path(metrics_path).parent / "plot_data"
    out.mkdir(parents=True, exist_ok=True)
    fields = [f for f in PLOT_FIELDS if f != "wall_clock_s" or any(r.wall_clock_s is not None for r in records)]

    tables: Dict[str, Path] = {}
    for name in fields:
        table_path = out / f"{name}.csv"
        with table_path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["env_steps", name])
            for record in records:
                value = getattr(record, name)
                if isinstance(value, bool):
                    value = int(value)
                writer.writerow([record.env_steps, "" if value is None else value])
        tables[name] = table_path
    logger.info(f"Exported {len(fields)} tables with {len(records)} rows each to {out}")
    return tables
