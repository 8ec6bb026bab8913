import logging
from typing import TYPE_CHECKING, Any, Dict, Optional

import psutil

from opr_trainer.config import settings
from opr_trainer.harness.callbacks.base import EventFn, _BaseCallback

if TYPE_CHECKING:
    from opr_trainer.harness.metrics import MetricsRecord
    from opr_trainer.harness.trainer import Trainer

logger = logging.getLogger(__name__)


class HardwareMonitorCallback(_BaseCallback):
    """Simple hardware monitoring callback."""

    def __init__(self, event_cb: Optional[EventFn] = None, interval: Optional[int] = None) -> None:
        super().__init__(event_cb)
        self.interval = interval or settings.hardware_log_interval
        self._process: Optional[psutil.Process] = None

    def on_train_begin(self, trainer: "Trainer", resumed_from: Optional[int] = None) -> None:
        self._process = psutil.Process()
        self._process.cpu_percent(None)

    def on_update_end(self, trainer: "Trainer", record: "MetricsRecord") -> None:
        if (record.update_index + 1) % self.interval != 0 or self._process is None:
            return
        metrics: Dict[str, Any] = {
            "cpu_percent": self._process.cpu_percent(),
            "ram_gb": round(self._process.memory_info().rss / 1024**3, 2),
        }
        self._send("debug", "Hardware metrics", metrics)
