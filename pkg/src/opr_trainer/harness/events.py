"""Run lifecycle events, serialized one per line into ``events.jsonl``."""

import time
import uuid
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field


class RunEvent(BaseModel):
    """Base class for run events; ``event_type`` defaults to the class name."""

    model_config = ConfigDict(use_enum_values=True)

    id: str = Field(default_factory=lambda: f"event_{uuid.uuid4().hex[:8]}")
    timestamp: float = Field(default_factory=time.time)
    run_name: str = Field(..., description="Run the event belongs to")
    event_type: str = Field(default="", description="Type of event for easy filtering")
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def __init__(self, **data: Any) -> None:
        super().__init__(**data)
        if not self.event_type:
            self.event_type = self.__class__.__name__


class RunStarted(RunEvent):
    env_name: str = Field(..., description="Registered environment name")
    seed: int = Field(..., ge=0, description="Master seed")
    num_updates: int = Field(..., ge=0, description="Planned number of updates")
    opr_enabled: bool = Field(..., description="Whether OPR influences learning")
    resumed_from: Optional[int] = Field(None, description="Update index restored from a checkpoint")


class UpdateCompleted(RunEvent):
    update_index: int = Field(..., ge=0)
    env_steps: int = Field(..., ge=0)
    mean_return: Optional[float] = Field(None, description="Mean raw return of episodes finished this update")
    policy_entropy: float = Field(..., description="Mean entropy of the acting policy")
    total_loss: float = Field(..., description="Mean total loss over minibatch steps")


class CheckpointSaved(RunEvent):
    checkpoint_path: str = Field(..., description="Path to the saved checkpoint")
    update_index: int = Field(..., ge=0, description="Updates completed when saved")
    env_steps: int = Field(..., ge=0)


class RunCompleted(RunEvent):
    updates: int = Field(..., ge=0)
    env_steps: int = Field(..., ge=0)
    episodes: int = Field(..., ge=0)
    final_mean_return: Optional[float] = Field(None)
    training_time: float = Field(..., ge=0, description="Wall-clock seconds")


class RunFailed(RunEvent):
    error_message: str = Field(..., description="Error description")
    error_type: str = Field(..., description="Exception class name")
    component: Optional[str] = Field(None, description="Loss component that went non-finite")
    update_index: Optional[int] = Field(None, description="Update that failed")
