# mypy: ignore-errors

import numpy as np
import pytest

from opr_trainer.envs import (
    AlertKind,
    DeepChain,
    DefenderAction,
    DistractorGrid,
    EnvConfig,
    MiniDefense,
    list_envs,
    make_env,
    optimal_return,
)
from opr_trainer.errors import ConfigError, DomainError, EnvUsageError, UnsupportedError


def rollout(env, actions, seed=0):
    """Play a fixed action list from a reset; returns the step results."""
    env.reset(seed)
    results = []
    for a in actions:
        results.append(env.step(a))
        if results[-1].done:
            break
    return results


class TestDeepChain:
    """Test the chain with a trap action."""

    def test_reset(self):
        """Episodes start at position 0."""
        env = DeepChain(5)
        first = env.reset(0)
        np.testing.assert_array_equal(first.observation, [1, 0, 0, 0, 0, 0])
        assert first.state_key == 0
        assert env.spec.observation_dim == 6
        assert env.spec.action_count == 2
        assert env.spec.max_episode_steps == 10

    def test_reach_goal(self):
        """N consecutive RIGHT actions pay the goal reward and terminate."""
        results = rollout(DeepChain(5), [DeepChain.RIGHT] * 5)
        assert [r.reward for r in results] == [0.0, 0.0, 0.0, 0.0, 10.0]
        assert results[-1].terminated
        assert not results[-1].truncated

    def test_left_resets_and_pays_trap(self):
        """LEFT pays the trap reward and returns to the start."""
        env = DeepChain(5)
        env.reset(0)
        env.step(DeepChain.RIGHT)
        result = env.step(DeepChain.LEFT)
        assert result.reward == 0.01
        assert result.state_key == 0

    def test_horizon_truncates(self):
        """Always-LEFT runs into the 2N horizon as truncation, not termination."""
        results = rollout(DeepChain(5), [DeepChain.LEFT] * 20)
        assert len(results) == 10
        assert results[-1].truncated
        assert not results[-1].terminated
        assert sum(r.reward for r in results) == pytest.approx(0.1)

    def test_greedy_trap_is_far_from_optimal(self):
        """The trap-only return stays below 5% of the optimum for N in 10..20."""
        for n in range(10, 21):
            env = DeepChain(n)
            greedy = sum(r.reward for r in rollout(env, [DeepChain.LEFT] * (2 * n)))
            assert greedy < 0.05 * optimal_return(env)

    @pytest.mark.parametrize("n", [12, 20])
    def test_uniform_policy_goal_rate(self, n):
        """A coin-flip policy finishes the chain with probability (N+2)/2^(N+1) within its 2N horizon."""
        env = DeepChain(n)
        states, reached = {env.initial_state(np.random.default_rng(0)): 1.0}, 0.0
        for _ in range(env.spec.max_episode_steps):
            following = {}
            for state, p in states.items():
                for action in (DeepChain.LEFT, DeepChain.RIGHT):
                    position, _, done = env.transition(state, action)
                    if done:
                        reached += p / 2
                    else:
                        following[position] = following.get(position, 0.0) + p / 2
            states = following
        assert reached == pytest.approx((n + 2) / 2 ** (n + 1), rel=1e-12)

    def test_optimal_return(self):
        """Collect trap rewards while there is slack, then run right."""
        assert optimal_return(DeepChain(4)) == pytest.approx(10.04)
        assert optimal_return(DeepChain(20)) == pytest.approx(10.2)

    def test_step_after_done(self):
        """Stepping a finished episode is a usage error."""
        env = DeepChain(1)
        env.reset(0)
        env.step(DeepChain.RIGHT)
        with pytest.raises(EnvUsageError):
            env.step(DeepChain.RIGHT)

    def test_step_before_reset(self):
        """reset() must come first."""
        with pytest.raises(EnvUsageError):
            DeepChain(3).step(0)

    def test_invalid_action(self):
        """Actions outside the action set are rejected."""
        env = DeepChain(3)
        env.reset(0)
        with pytest.raises(DomainError):
            env.step(2)


class TestDistractorGrid:
    """Test the gridworld with a nearby distractor."""

    def test_distractor_is_two_steps_away(self):
        """Two moves right from (0, 0) hit the distractor."""
        results = rollout(DistractorGrid(), [3, 3])
        assert results[-1].reward == 1.0
        assert results[-1].terminated

    def test_goal_path(self):
        """Down six, right six reaches the goal without touching the distractor."""
        results = rollout(DistractorGrid(), [1] * 6 + [3] * 6)
        assert len(results) == 12
        assert results[-1].reward == 20.0
        assert results[-1].terminated
        assert sum(r.reward for r in results) == 20.0

    def test_walls_clamp(self):
        """Moving into a wall stays in place."""
        env = DistractorGrid()
        env.reset(0)
        result = env.step(0)
        assert result.state_key == (0, 0)
        assert result.reward == 0.0

    def test_optimal_return(self):
        """The planner finds the goal."""
        assert optimal_return(DistractorGrid()) == pytest.approx(20.0)

    def test_distinct_keys(self):
        """Every cell has its own key and observation."""
        env = DistractorGrid(grid_size=4)
        cells = [(r, c) for r in range(4) for c in range(4)]
        assert len({env.state_key(c) for c in cells}) == 16
        observations = np.stack([env.observe(c) for c in cells])
        assert np.linalg.matrix_rank(observations) == 16

    def test_cells_outside_grid_rejected(self):
        """Reward cells must lie on the grid."""
        with pytest.raises(ValueError):
            DistractorGrid(grid_size=3, distractor=(0, 5))


class TestMiniDefense:
    """Test the network-defense game."""

    def _monitor(self, host, n=2):
        return int(DefenderAction.MONITOR) * n + host

    def _decoy(self, host, n=2):
        return int(DefenderAction.DECOY) * n + host

    def _restore(self, host, n=2):
        return int(DefenderAction.RESTORE) * n + host

    def test_spec(self):
        """3n actions and 3n + 4 observation features."""
        env = MiniDefense(num_hosts=5)
        assert env.spec.action_count == 15
        assert env.spec.observation_dim == 19
        assert env.spec.max_episode_steps == 30

    def test_attack_path_ends_at_crown(self):
        """The seeded path visits every host once and ends at the crown jewel."""
        env = MiniDefense(num_hosts=5)
        for seed in range(10):
            env.reset(seed)
            path = env.state.path
            assert sorted(path) == list(range(5))
            assert path[-1] == 4

    def test_unopposed_attack(self):
        """Scan then exploit; the crown costs an extra penalty."""
        env = MiniDefense(num_hosts=2, attacker_path=[0, 1])
        results = rollout(env, [self._monitor(1), self._monitor(1), self._monitor(0), self._monitor(0), 0])
        assert [r.reward for r in results] == [0.0, -1.0, -1.0, -12.0, -2.0]
        assert env.state.alert_kind == AlertKind.NONE
        assert not any(r.terminated for r in results)

    def test_monitor_blocks_exploit(self):
        """Monitoring the scanned host blocks the exploit."""
        env = MiniDefense(num_hosts=2, attacker_path=[0, 1])
        results = rollout(env, [self._monitor(1), self._monitor(0)])
        assert results[0].state_key[5] == AlertKind.SCAN
        assert results[1].reward == 0.0
        assert env.state.alert_kind == AlertKind.BLOCKED
        assert env.state.compromised == 0

    def test_decoy_absorbs_one_exploit(self):
        """A decoy is consumed and forces a rescan."""
        env = MiniDefense(num_hosts=2, attacker_path=[0, 1])
        results = rollout(env, [self._decoy(0), self._monitor(1), self._monitor(1)])
        assert [r.reward for r in results] == [0.0, 0.0, 0.0]
        assert env.state.decoys == 0
        assert env.state.alert_kind == AlertKind.SCAN

    def test_restore_clears_compromise(self):
        """Restoring a host removes it from the compromised set."""
        env = MiniDefense(num_hosts=2, attacker_path=[0, 1])
        rollout(env, [self._monitor(1), self._monitor(1)])
        assert env.state.compromised == 1
        env.step(self._restore(0))
        assert env.state.compromised & 1 == 0

    def test_horizon(self):
        """Episodes never terminate and are truncated at the horizon."""
        env = MiniDefense(num_hosts=2, attacker_path=[0, 1], max_episode_steps=6)
        results = rollout(env, [self._monitor(0)] * 10)
        assert len(results) == 6
        assert results[-1].truncated

    def test_optimal_return(self):
        """Monitoring the scanned host every turn keeps the network clean."""
        assert optimal_return(MiniDefense(num_hosts=2, attacker_path=[0, 1], max_episode_steps=10)) == 0.0

    def test_invalid_path(self):
        """A custom attack path must end at the crown jewel."""
        with pytest.raises(ValueError):
            MiniDefense(num_hosts=3, attacker_path=[2, 0, 1])

    def test_planner_state_limit(self):
        """Too many planning states is unsupported."""
        with pytest.raises(UnsupportedError):
            optimal_return(MiniDefense(num_hosts=3), max_states=10)


class TestEnvironmentContract:
    """Test behavior shared by every registered environment."""

    @pytest.mark.parametrize("name", ["deep_chain", "distractor_grid", "mini_defense"])
    def test_determinism(self, name):
        """Same seed and actions give identical trajectories."""
        actions = np.random.default_rng(0).integers(0, make_env(name).spec.action_count, size=40)
        a = rollout(make_env(name), actions, seed=3)
        b = rollout(make_env(name), actions, seed=3)
        assert len(a) == len(b)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.observation, y.observation)
            assert (x.reward, x.terminated, x.truncated) == (y.reward, y.terminated, y.truncated)
            assert x.state_key == y.state_key

    @pytest.mark.parametrize("name", ["deep_chain", "distractor_grid", "mini_defense"])
    def test_state_round_trip(self, name):
        """get_state/set_state resumes the exact trajectory."""
        rng = np.random.default_rng(1)
        env = make_env(name)
        env.reset(5)
        for a in rng.integers(0, env.spec.action_count, size=3):
            if env.step(int(a)).done:
                env.reset(6)
        saved = env.get_state()
        first = []
        for a in rng.integers(0, env.spec.action_count, size=3):
            first.append((int(a), env.step(int(a))))
            if first[-1][1].done:
                break

        clone = make_env(name)
        clone.set_state(saved)
        second = [clone.step(a) for a, _ in first]
        assert [r.state_key for _, r in first] == [r.state_key for r in second]
        assert [r.reward for _, r in first] == [r.reward for r in second]

    @pytest.mark.parametrize("name", ["deep_chain", "distractor_grid", "mini_defense"])
    def test_observation_shape(self, name):
        """Observations have the advertised width."""
        env = make_env(name)
        assert env.reset(0).observation.shape == (env.spec.observation_dim,)


class TestRegistry:
    """Test environment lookup by name."""

    def test_list_envs(self):
        """The three bundled environments are registered."""
        assert list_envs() == ["deep_chain", "distractor_grid", "mini_defense"]

    def test_unknown_env(self):
        """An unknown name is a configuration error."""
        with pytest.raises(ConfigError):
            make_env("cartpole")

    def test_env_config_build(self):
        """EnvConfig passes only the parameters of the selected environment."""
        env = EnvConfig(env_name="deep_chain", chain_length=7).build()
        assert isinstance(env, DeepChain)
        assert env.spec.observation_dim == 8
        grid = EnvConfig(env_name="distractor_grid", grid_size=5, max_episode_steps=40).build()
        assert grid.spec.max_episode_steps == 40
