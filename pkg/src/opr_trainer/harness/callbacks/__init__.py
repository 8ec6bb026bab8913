from opr_trainer.harness.callbacks.base import TrainerCallback
from opr_trainer.harness.callbacks.event_log import EventLogCallback
from opr_trainer.harness.callbacks.hardware_monitor import HardwareMonitorCallback
from opr_trainer.harness.callbacks.progress import ProgressCallback

__all__ = ["EventLogCallback", "HardwareMonitorCallback", "ProgressCallback", "TrainerCallback"]
