"""Miniature network-defense game against a scripted attacker."""

from enum import IntEnum
from typing import Any, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from opr_trainer.envs.base import Environment, EnvSpec

NO_HOST = -1


class DefenderAction(IntEnum):
    MONITOR = 0
    RESTORE = 1
    DECOY = 2


class AlertKind(IntEnum):
    NONE = 0
    SCAN = 1
    BLOCKED = 2
    SUCCESS = 3


class DefenseState(NamedTuple):
    path: Tuple[int, ...]
    compromised: int
    decoys: int
    scanned: int
    alert: int
    alert_kind: int


class MiniDefense(Environment[DefenseState]):
    """Defend ``num_hosts`` hosts; the last host is the crown jewel.

    The attacker walks a seeded path, scanning a host before exploiting it. Action ``a`` applies
    ``DefenderAction(a // num_hosts)`` to host ``a % num_hosts`` before the attacker moves.
    """

    def __init__(
        self,
        num_hosts: int = 5,
        max_episode_steps: Optional[int] = None,
        host_penalty: float = 1.0,
        crown_penalty: float = 10.0,
        attacker_path: Optional[Sequence[int]] = None,
    ) -> None:
        super().__init__()
        if num_hosts < 2:
            raise ValueError("MiniDefense needs at least two hosts")
        self.num_hosts = num_hosts
        self.crown = num_hosts - 1
        self.host_penalty = host_penalty
        self.crown_penalty = crown_penalty
        if attacker_path is not None:
            path = tuple(int(h) for h in attacker_path)
            if sorted(path) != list(range(num_hosts)) or path[-1] != self.crown:
                raise ValueError("attacker_path must visit every host once and end at the crown jewel")
        self.attacker_path = None if attacker_path is None else path
        self.spec = EnvSpec(
            name="mini_defense",
            observation_dim=3 * num_hosts + 4,
            action_count=3 * num_hosts,
            max_episode_steps=max_episode_steps or 30,
        )

    def initial_state(self, rng: np.random.Generator) -> DefenseState:
        if self.attacker_path is not None:
            path = self.attacker_path
        else:
            path = tuple(int(h) for h in rng.permutation(self.crown)) + (self.crown,)
        return DefenseState(path, 0, 0, NO_HOST, NO_HOST, AlertKind.NONE)

    def _target(self, path: Tuple[int, ...], compromised: int) -> int:
        for host in path:
            if not compromised & (1 << host):
                return host
        return NO_HOST

    def transition(self, state: DefenseState, action: int) -> Tuple[DefenseState, float, bool]:
        kind, host = DefenderAction(action // self.num_hosts), action % self.num_hosts
        bit = 1 << host
        compromised, decoys = state.compromised, state.decoys
        monitored = NO_HOST
        if kind == DefenderAction.MONITOR:
            monitored = host
        elif kind == DefenderAction.RESTORE:
            compromised &= ~bit
        elif not compromised & bit:
            decoys |= bit

        scanned, alert, alert_kind = state.scanned, NO_HOST, AlertKind.NONE
        crown_hit = False
        target = self._target(state.path, compromised)
        if target != NO_HOST:
            target_bit = 1 << target
            alert = target
            if scanned != target:
                scanned, alert_kind = target, AlertKind.SCAN
            elif monitored == target:
                alert_kind = AlertKind.BLOCKED
            elif decoys & target_bit:
                decoys &= ~target_bit
                scanned, alert_kind = NO_HOST, AlertKind.BLOCKED
            else:
                compromised |= target_bit
                scanned, alert_kind = NO_HOST, AlertKind.SUCCESS
                crown_hit = target == self.crown

        reward = -self.host_penalty * bin(compromised).count("1")
        if crown_hit:
            reward -= self.crown_penalty
        next_state = DefenseState(state.path, compromised, decoys, scanned, alert, int(alert_kind))
        return next_state, reward, False

    def observe(self, state: DefenseState) -> np.ndarray:
        n = self.num_hosts
        obs = np.zeros(self.spec.observation_dim)
        for host in range(n):
            obs[host] = float(bool(state.compromised & (1 << host)))
            obs[n + host] = float(bool(state.decoys & (1 << host)))
        obs[2 * n + (state.alert if state.alert != NO_HOST else n)] = 1.0
        if state.alert_kind != AlertKind.NONE:
            obs[3 * n + state.alert_kind] = 1.0
        return obs

    def state_key(self, state: DefenseState) -> Tuple[Any, ...]:
        return tuple(state)

    def planning_key(self, state: DefenseState) -> Tuple[Any, ...]:
        # alerts only feed the observation
        return state.path, state.compromised, state.decoys, state.scanned

    def encode_state(self, state: DefenseState) -> list[Any]:
        return [list(state.path), state.compromised, state.decoys, state.scanned, state.alert, state.alert_kind]

    def decode_state(self, raw: Any) -> DefenseState:
        path, compromised, decoys, scanned, alert, alert_kind = raw
        return DefenseState(
            tuple(int(h) for h in path), int(compromised), int(decoys), int(scanned), int(alert), int(alert_kind)
        )
