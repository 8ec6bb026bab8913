"""Versioned JSON checkpoints of agent parameters, optimizer state and trainer progress."""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from opr_trainer.agent import AgentOptimizer, AgentParams
from opr_trainer.errors import CheckpointError, ShapeError
from opr_trainer.numkit import Activation, AdamState, MlpParams

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "opr-lab-checkpoint"
CHECKPOINT_VERSION = 1

NETWORK_NAMES = ("policy", "value", "trunk")


class NetworkPayload(BaseModel):
    layer_sizes: List[int]
    activation: Activation
    weights: List[List[List[float]]]
    biases: List[List[float]]


class AdamPayload(BaseModel):
    network: str
    step_count: int = Field(..., ge=0)
    beta1: float
    beta2: float
    epsilon: float
    first_moment: List[List[Any]]
    second_moment: List[List[Any]]


class CheckpointPayload(BaseModel):
    """On-disk layout; floats are written with Python's shortest round-trip repr."""

    format: Literal["opr-lab-checkpoint"]
    version: int
    networks: Dict[str, NetworkPayload]
    optimizer: List[AdamPayload]
    trainer: Optional[Dict[str, Any]] = None


@dataclass(slots=True)
class LoadedCheckpoint:
    params: AgentParams
    optimizer: AgentOptimizer
    trainer_state: Optional[Dict[str, Any]] = None


def _network_payload(net: MlpParams) -> NetworkPayload:
    return NetworkPayload(
        layer_sizes=list(net.layer_sizes),
        activation=net.activation,
        weights=[w.tolist() for w in net.weights],
        biases=[b.tolist() for b in net.biases],
    )


def save_checkpoint(
    path: Union[str, Path],
    params: AgentParams,
    optimizer: AgentOptimizer,
    trainer_state: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a checkpoint atomically through a temporary sibling file."""
    names = NETWORK_NAMES[: len(params.networks())]
    payload = CheckpointPayload(
        format=CHECKPOINT_FORMAT,
        version=CHECKPOINT_VERSION,
        networks={name: _network_payload(net) for name, net in zip(names, params.networks())},
        optimizer=[
            AdamPayload(
                network=name,
                step_count=state.step_count,
                beta1=state.beta1,
                beta2=state.beta2,
                epsilon=state.epsilon,
                first_moment=[m.tolist() for m in state.first_moment],
                second_moment=[v.tolist() for v in state.second_moment],
            )
            for name, state in zip(names, optimizer.states)
        ],
        trainer=trainer_state,
    )
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(target.suffix + ".tmp")
    tmp.write_text(payload.model_dump_json(), encoding="utf-8")
    os.replace(tmp, target)
    logger.debug(f"Saved checkpoint {target}")
    return target


def _array(raw: Any, field: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except ValueError as e:
        raise CheckpointError(f"ragged array ({e})", field=field) from e
    return arr


def _network(name: str, payload: NetworkPayload) -> MlpParams:
    weights = [_array(w, f"networks.{name}.weights[{i}]") for i, w in enumerate(payload.weights)]
    biases = [_array(b, f"networks.{name}.biases[{i}]") for i, b in enumerate(payload.biases)]
    try:
        return MlpParams(list(payload.layer_sizes), weights, biases, payload.activation)
    except ShapeError as e:
        raise CheckpointError(str(e), field=f"networks.{name}") from e


def _adam(payload: AdamPayload, net: MlpParams) -> AdamState:
    prefix = f"optimizer.{payload.network}"
    first = [_array(m, f"{prefix}.first_moment[{i}]") for i, m in enumerate(payload.first_moment)]
    second = [_array(v, f"{prefix}.second_moment[{i}]") for i, v in enumerate(payload.second_moment)]
    shapes = [a.shape for a in net.arrays()]
    for field, moments in (("first_moment", first), ("second_moment", second)):
        if [m.shape for m in moments] != shapes:
            raise CheckpointError("moment shapes do not match the network", field=f"{prefix}.{field}")
    return AdamState(first, second, payload.step_count, payload.beta1, payload.beta2, payload.epsilon)


def load_checkpoint(path: Union[str, Path]) -> LoadedCheckpoint:
    """Read a checkpoint; any defect raises CheckpointError naming the offending field."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = CheckpointPayload.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "file"
        raise CheckpointError(first["msg"], field=field) from e
    if payload.version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported version {payload.version}, expected {CHECKPOINT_VERSION}", field="version")

    for required in ("policy", "value"):
        if required not in payload.networks:
            raise CheckpointError("network missing", field=f"networks.{required}")
    names = [n for n in NETWORK_NAMES if n in payload.networks]
    nets = [_network(name, payload.networks[name]) for name in names]
    if [a.network for a in payload.optimizer] != names:
        raise CheckpointError("optimizer states do not match the stored networks", field="optimizer")
    try:
        params = AgentParams(nets[0], nets[1], nets[2] if len(nets) > 2 else None)
    except ShapeError as e:
        raise CheckpointError(str(e), field="networks") from e
    optimizer = AgentOptimizer([_adam(a, net) for a, net in zip(payload.optimizer, nets)])
    return LoadedCheckpoint(params, optimizer, payload.trainer)


def checkpoint_path(run_dir: Union[str, Path], update_index: int) -> Path:
    return Path(run_dir) / "checkpoints" / f"ckpt-{update_index}.json"


def list_checkpoints(run_dir: Union[str, Path]) -> List[Path]:
    """Checkpoints of a run, oldest first."""
    directory = Path(run_dir) / "checkpoints"
    if not directory.is_dir():
        return []
    found = [p for p in directory.glob("ckpt-*.json") if p.stem.split("-")[1].isdigit()]
    return sorted(found, key=lambda p: int(p.stem.split("-")[1]))


def prune_checkpoints(run_dir: Union[str, Path], keep: int) -> List[Path]:
    """Delete all but the newest ``keep`` checkpoints; returns the deleted paths."""
    existing = list_checkpoints(run_dir)
    stale = existing[: max(len(existing) - keep, 0)]
    for p in stale:
        p.unlink()
    return stale
