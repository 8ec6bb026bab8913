import logging
import time
from typing import TYPE_CHECKING, Optional

from opr_trainer.harness.callbacks.base import _BaseCallback

if TYPE_CHECKING:
    from opr_trainer.harness.metrics import MetricsRecord
    from opr_trainer.harness.summary import RunSummary
    from opr_trainer.harness.trainer import Trainer

logger = logging.getLogger(__name__)


class ProgressCallback(_BaseCallback):
    """Streams per-update progress to ``event_cb``."""

    _first_update = 0

    def on_train_begin(self, trainer: "Trainer", resumed_from: Optional[int] = None) -> None:
        self._t0 = time.time()
        self._first_update = trainer.update_index
        start = f"resumed at update {resumed_from}" if resumed_from is not None else "started"
        self._send(
            "info",
            f"Run {trainer.config.run_name} {start}: "
            f"{trainer.num_updates} updates on {trainer.config.env.env_name}",
            {"run_name": trainer.config.run_name, "num_updates": trainer.num_updates},
        )

    def on_update_end(self, trainer: "Trainer", record: "MetricsRecord") -> None:
        total = trainer.num_updates
        done = record.update_index + 1
        pct = 100 * done / total if total > 0 else 100.0
        mean_return = "n/a" if record.mean_return is None else f"{record.mean_return:.3f}"
        self._send(
            "info",
            f"Update {done}/{total} ({pct:.1f} %) - return {mean_return} - entropy {record.policy_entropy:.4f} "
            f"- loss {record.total_loss:.4f} - ETA {self._eta(done - self._first_update, total - self._first_update)}",
            {"update": done, "env_steps": record.env_steps, "progress_pct": round(pct, 2)},
        )

    def on_train_end(self, trainer: "Trainer", summary: "RunSummary") -> None:
        self._send(
            "info",
            f"Run {summary.run_name} finished: {summary.episodes} episodes, final mean return "
            f"{summary.final_mean_return}",
            {"env_steps": summary.env_steps},
        )
