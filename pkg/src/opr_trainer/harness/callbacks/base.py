import logging
import time
from typing import TYPE_CHECKING, Any, Callable, Dict, Optional

if TYPE_CHECKING:
    from opr_trainer.harness.metrics import MetricsRecord
    from opr_trainer.harness.summary import RunSummary
    from opr_trainer.harness.trainer import Trainer

logger = logging.getLogger(__name__)

EventFn = Callable[[str, str, Dict[str, Any]], None]


class TrainerCallback:
    """Hooks invoked by the runner around training; every hook is a no-op by default."""

    def on_train_begin(self, trainer: "Trainer", resumed_from: Optional[int] = None) -> None:
        pass

    def on_update_end(self, trainer: "Trainer", record: "MetricsRecord") -> None:
        pass

    def on_checkpoint(self, trainer: "Trainer", path: str) -> None:
        pass

    def on_train_end(self, trainer: "Trainer", summary: "RunSummary") -> None:
        pass

    def on_failure(self, trainer: "Trainer", error: BaseException) -> None:
        pass


class _BaseCallback(TrainerCallback):
    """Shared utilities for custom callbacks."""

    def __init__(self, event_cb: Optional[EventFn] = None) -> None:
        self.event_cb = event_cb
        self._t0: float | None = None

    def _send(self, level: str, msg: str, data: Dict[str, Any] | None = None) -> None:
        if self.event_cb:
            self.event_cb(level, msg, data or {})

    def _eta(self, done: int, total: int) -> str:
        if not self._t0 or done == 0:
            return "--:--"
        seconds = (time.time() - self._t0) / done * (total - done)
        return f"{int(seconds // 60)}m {int(seconds % 60)}s"
