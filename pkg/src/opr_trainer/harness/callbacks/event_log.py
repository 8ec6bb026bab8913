import logging
import time
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

from opr_trainer.errors import NumericalError
from opr_trainer.harness.callbacks.base import TrainerCallback
from opr_trainer.harness.events import (
    CheckpointSaved,
    RunCompleted,
    RunEvent,
    RunFailed,
    RunStarted,
    UpdateCompleted,
)

if TYPE_CHECKING:
    from opr_trainer.harness.metrics import MetricsRecord
    from opr_trainer.harness.summary import RunSummary
    from opr_trainer.harness.trainer import Trainer

logger = logging.getLogger(__name__)


class EventLogCallback(TrainerCallback):
    """Appends one JSON event per line to ``path``."""

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self._t0 = time.time()

    def _write(self, event: RunEvent) -> None:
        with self.path.open("a", encoding="utf-8") as f:
            f.write(event.model_dump_json() + "\n")

    def on_train_begin(self, trainer: "Trainer", resumed_from: Optional[int] = None) -> None:
        self._t0 = time.time()
        self._write(
            RunStarted(
                run_name=trainer.config.run_name,
                env_name=trainer.config.env.env_name,
                seed=trainer.config.seed,
                num_updates=trainer.num_updates,
                opr_enabled=trainer.config.opr.opr_enabled,
                resumed_from=resumed_from,
            )
        )

    def on_update_end(self, trainer: "Trainer", record: "MetricsRecord") -> None:
        self._write(
            UpdateCompleted(
                run_name=trainer.config.run_name,
                update_index=record.update_index,
                env_steps=record.env_steps,
                mean_return=record.mean_return,
                policy_entropy=record.policy_entropy,
                total_loss=record.total_loss,
            )
        )

    def on_checkpoint(self, trainer: "Trainer", path: str) -> None:
        self._write(
            CheckpointSaved(
                run_name=trainer.config.run_name,
                checkpoint_path=path,
                update_index=trainer.update_index,
                env_steps=trainer.env_steps,
            )
        )

    def on_train_end(self, trainer: "Trainer", summary: "RunSummary") -> None:
        self._write(
            RunCompleted(
                run_name=summary.run_name,
                updates=summary.updates,
                env_steps=summary.env_steps,
                episodes=summary.episodes,
                final_mean_return=summary.final_mean_return,
                training_time=time.time() - self._t0,
            )
        )

    def on_failure(self, trainer: "Trainer", error: BaseException) -> None:
        self._write(
            RunFailed(
                run_name=trainer.config.run_name,
                error_message=str(error),
                error_type=type(error).__name__,
                component=error.component if isinstance(error, NumericalError) else None,
                update_index=trainer.update_index,
            )
        )
