"""End-of-run summary statistics."""

import math
from typing import TYPE_CHECKING, Optional

import numpy as np
from pydantic import BaseModel, Field

if TYPE_CHECKING:
    from opr_trainer.harness.trainer import Trainer


class RunSummary(BaseModel):
    run_name: str
    env_name: str
    seed: int
    opr_enabled: bool
    updates: int = Field(..., ge=0)
    env_steps: int = Field(..., ge=0)
    episodes: int = Field(..., ge=0)
    episode_steps: int = Field(..., ge=0, description="Sum of finished episode lengths")
    partial_steps: int = Field(..., ge=0, description="Steps of episodes still running at the end")
    final_mean_return: Optional[float] = Field(None, description="Mean raw return of the last final_window episodes")
    peak_mean_return: Optional[float] = Field(None, description="Best per-update mean raw return")
    auc: Optional[float] = Field(None, description="Step-weighted mean of per-update mean returns")
    success_threshold: Optional[float] = None
    steps_to_threshold: Optional[int] = Field(None, description="Env step at which a return first met the threshold")
    entropy_collapse_step: Optional[int] = Field(None, description="First env step with entropy below 0.1 ln|A|")

    @property
    def reached_threshold(self) -> bool:
        return self.steps_to_threshold is not None


def summarize(trainer: "Trainer") -> RunSummary:
    config = trainer.config
    returns = trainer.episodes.returns
    window = returns[-config.final_window :]
    threshold = trainer.success_threshold

    steps_to_threshold: Optional[int] = None
    if threshold is not None:
        # tolerate float noise in summed rewards
        target = threshold - 1e-9 * max(1.0, abs(threshold))
        hit = next((i for i, r in enumerate(returns) if r >= target), None)
        if hit is not None:
            steps_to_threshold = trainer.episodes.end_steps[hit]

    per_update = trainer.update_returns
    return RunSummary(
        run_name=config.run_name,
        env_name=config.env.env_name,
        seed=config.seed,
        opr_enabled=config.opr.opr_enabled,
        updates=trainer.update_index,
        env_steps=trainer.env_steps,
        episodes=len(returns),
        episode_steps=int(sum(trainer.episodes.lengths)),
        partial_steps=trainer.partial_steps(),
        final_mean_return=float(np.mean(window)) if window else None,
        peak_mean_return=max(per_update) if per_update else None,
        # every update consumes steps_per_update steps, so the weights are uniform
        auc=float(np.mean(per_update)) if per_update else None,
        success_threshold=threshold if threshold is None or math.isfinite(threshold) else None,
        steps_to_threshold=steps_to_threshold,
        entropy_collapse_step=trainer.entropy_collapse_step,
    )
