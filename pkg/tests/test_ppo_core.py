# mypy: ignore-errors

import itertools
import math

import numpy as np
import pytest

from opr_trainer.agent import AgentConfig, AgentGrads, AgentOptimizer, apply_gradients, evaluate, init_agent
from opr_trainer.errors import DomainError, NumericalError
from opr_trainer.numkit import clip_by_global_norm
from opr_trainer.opr import BehaviorSampler, GoodEpisodeBuffer
from opr_trainer.ppo import (
    Minibatch,
    OprAugmentation,
    PpoConfig,
    RolloutBatch,
    actor_loss,
    clipped_surrogate_loss,
    compute_gae,
    concatenate,
    linear_decay,
    loss_and_grads,
    normalize_advantages,
    ppo_update,
    value_loss,
    value_loss_grad,
)


def make_batch(rewards, values, dones=None, truncated=None, truncation_values=None, bootstrap=0.0, obs_dim=2):
    n = len(rewards)
    rewards = np.asarray(rewards, dtype=float)
    return RolloutBatch(
        states=np.zeros((n, obs_dim)),
        actions=np.zeros(n, dtype=np.int64),
        raw_rewards=rewards,
        shaped_rewards=rewards.copy(),
        old_log_probs=np.full(n, -math.log(2)),
        values=np.asarray(values, dtype=float),
        dones=np.zeros(n, dtype=bool) if dones is None else np.asarray(dones, dtype=bool),
        truncated=np.zeros(n, dtype=bool) if truncated is None else np.asarray(truncated, dtype=bool),
        truncation_values=np.zeros(n) if truncation_values is None else np.asarray(truncation_values, dtype=float),
        bootstrap_value=bootstrap,
        state_keys=list(range(n)),
    )


def reference_advantages(rewards, values, dones, bootstrap, gamma, lam):
    """Closed-form sum of discounted TD errors up to the first episode end."""
    n = len(rewards)
    deltas = []
    for t in range(n):
        if dones[t]:
            next_value = 0.0
        else:
            next_value = values[t + 1] if t + 1 < n else bootstrap
        deltas.append(rewards[t] + gamma * next_value - values[t])
    advantages = []
    for t in range(n):
        total = 0.0
        for k in range(t, n):
            total += (gamma * lam) ** (k - t) * deltas[k]
            if dones[k]:
                break
        advantages.append(total)
    return np.array(advantages)


class TestComputeGae:
    """Test generalized advantage estimation."""

    def test_all_zero(self):
        """Zero rewards and values give zero advantages and targets."""
        out = compute_gae(make_batch([0.0] * 5, [0.0] * 5), PpoConfig())
        np.testing.assert_array_equal(out.advantages, np.zeros(5))
        np.testing.assert_array_equal(out.return_targets, np.zeros(5))

    def test_lambda_one_is_discounted_return(self):
        """With lambda 1 and zero values the advantage is the discounted return plus bootstrap."""
        config = PpoConfig(gamma=0.9, gae_lambda=1.0)
        rewards = [1.0, 2.0, 3.0]
        out = compute_gae(make_batch(rewards, [0.0] * 3, bootstrap=5.0), config)
        expected = [1 + 0.9 * 2 + 0.81 * 3 + 0.729 * 5, 2 + 0.9 * 3 + 0.81 * 5, 3 + 0.9 * 5]
        np.testing.assert_allclose(out.advantages, expected, rtol=1e-10)

    def test_two_step_example(self):
        """r = (1, 0), V = (0.5, 0.5), gamma 0.99, lambda 0.95, bootstrap 0."""
        out = compute_gae(make_batch([1.0, 0.0], [0.5, 0.5]), PpoConfig(gamma=0.99, gae_lambda=0.95))
        assert out.advantages[1] == pytest.approx(-0.5, rel=1e-10)
        assert out.advantages[0] == pytest.approx(0.52475, rel=1e-10)
        np.testing.assert_allclose(out.return_targets, out.advantages + np.array([0.5, 0.5]), rtol=1e-12)

    def test_terminal_cuts_the_chain(self):
        """Nothing after a terminal step leaks into earlier advantages."""
        config = PpoConfig(gamma=0.99, gae_lambda=0.95)
        a = compute_gae(make_batch([1.0, 0.0, 5.0], [0.2, 0.1, 0.3], dones=[False, True, False]), config)
        b = compute_gae(make_batch([1.0, 0.0, -7.0], [0.2, 0.1, 9.0], dones=[False, True, False]), config)
        np.testing.assert_array_equal(a.advantages[:2], b.advantages[:2])

    def test_truncation_bootstraps_from_final_observation(self):
        """A truncated step uses the recorded value of the final observation."""
        config = PpoConfig(gamma=0.5, gae_lambda=0.0)
        out = compute_gae(
            make_batch([1.0], [0.0], dones=[True], truncated=[True], truncation_values=[4.0], bootstrap=100.0), config
        )
        assert out.advantages[0] == pytest.approx(1.0 + 0.5 * 4.0)

    def test_raw_rewards_when_unshaped(self):
        """use_shaped=False reads the raw reward stream."""
        batch = make_batch([1.0, 1.0], [0.0, 0.0])
        batch.shaped_rewards = np.array([2.0, 2.0])
        shaped = compute_gae(batch, PpoConfig())
        raw = compute_gae(batch, PpoConfig(), use_shaped=False)
        assert shaped.advantages[1] == pytest.approx(2.0)
        assert raw.advantages[1] == pytest.approx(1.0)

    def test_empty_rollout(self):
        """An empty rollout has no advantages."""
        with pytest.raises(DomainError):
            compute_gae(make_batch([], []), PpoConfig())

    def test_exhaustive_against_reference(self):
        """Every reward sequence over {-1, 0, 1} up to length 6 matches the closed form."""
        rng = np.random.default_rng(3)
        for n in range(1, 7):
            values = rng.normal(size=n)
            bootstrap = float(rng.normal())
            patterns = [[False] * n, [False] * (n - 1) + [True]]
            if n > 2:
                patterns.append([t == n // 2 for t in range(n)])
            for lam in (0.0, 0.95, 1.0):
                config = PpoConfig(gamma=0.99, gae_lambda=lam)
                for rewards in itertools.product((-1.0, 0.0, 1.0), repeat=n):
                    for dones in patterns:
                        out = compute_gae(make_batch(list(rewards), values, dones=dones, bootstrap=bootstrap), config)
                        expected = reference_advantages(rewards, values, dones, bootstrap, 0.99, lam)
                        np.testing.assert_allclose(out.advantages, expected, rtol=1e-9, atol=1e-12)

    def test_concatenate_keeps_order(self):
        """Concatenation preserves per-env order and advantages."""
        config = PpoConfig()
        a = compute_gae(make_batch([1.0, 2.0], [0.0, 0.0]), config)
        b = compute_gae(make_batch([3.0], [0.0]), config)
        merged = concatenate([a, b])
        np.testing.assert_array_equal(merged.raw_rewards, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(merged.advantages, np.concatenate([a.advantages, b.advantages]))
        assert merged.state_keys == [0, 1, 0]


class TestLosses:
    """Test the surrogate, value and actor losses."""

    def test_unit_ratio_is_mean_advantage(self):
        """At ratio 1 the surrogate is minus the mean advantage."""
        adv = np.array([1.0, -2.0, 0.5])
        out = clipped_surrogate_loss(np.zeros(3), np.zeros(3), adv, 0.1)
        assert out.loss == pytest.approx(-np.mean(adv))
        np.testing.assert_allclose(out.grad, -adv / 3)
        assert out.clip_fraction == 0.0

    def test_clipped_positive_advantage(self):
        """Ratio 1.5 with A = 1 is clipped to 1.1 and has no gradient."""
        out = clipped_surrogate_loss(np.array([math.log(1.5)]), np.zeros(1), np.ones(1), 0.1)
        assert out.loss == pytest.approx(-1.1, abs=1e-12)
        assert out.grad[0] == 0.0
        assert out.clip_fraction == 1.0

    def test_negative_advantage_keeps_gradient(self):
        """Ratio 1.5 with A = -1 takes the unclipped branch and keeps its gradient."""
        out = clipped_surrogate_loss(np.array([math.log(1.5)]), np.zeros(1), -np.ones(1), 0.1)
        assert out.loss == pytest.approx(1.5, abs=1e-12)
        assert out.grad[0] == pytest.approx(1.5, abs=1e-12)

    def test_dead_zone(self, rng):
        """Outside the clip range in the direction of the advantage the gradient is exactly zero."""
        ratios = np.exp(rng.normal(scale=0.5, size=500))
        adv = rng.normal(size=500)
        out = clipped_surrogate_loss(np.log(ratios), np.zeros(500), adv, 0.2)
        dead = ((adv > 0) & (ratios > 1.2)) | ((adv < 0) & (ratios < 0.8))
        assert np.all(out.grad[dead] == 0.0)
        assert np.all(out.grad[~dead & (adv != 0)] != 0.0)

    def test_non_finite_advantage(self):
        """NaN advantages raise NumericalError."""
        with pytest.raises(NumericalError):
            clipped_surrogate_loss(np.zeros(2), np.zeros(2), np.array([0.0, np.nan]), 0.1)

    def test_value_loss_examples(self):
        """Half mean squared error."""
        assert value_loss(np.array([0.0]), np.array([2.0])) == pytest.approx(2.0)
        assert value_loss(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == pytest.approx(1.25)
        assert value_loss(np.array([0.0, 0.0]), np.array([1.0, 2.0]) * math.sqrt(2)) == pytest.approx(2.5)
        np.testing.assert_allclose(value_loss_grad(np.array([1.0, 2.0]), np.zeros(2)), [0.5, 1.0])

    def test_actor_loss_example(self):
        """Zero surrogate with uniform 4-way entropy and coefficient 0.01."""
        assert actor_loss(0.0, math.log(4), PpoConfig(entropy_coef=0.01)) == pytest.approx(-0.013863, abs=1e-6)

    def test_linear_decay(self):
        """The learning rate anneals linearly to zero."""
        assert linear_decay(1.0, 0, 4) == 1.0
        assert linear_decay(1.0, 3, 4) == pytest.approx(0.25)
        assert linear_decay(1.0, 0, 0) == 1.0

    def test_normalize_advantages(self):
        """Zero mean and unit deviation; constant advantages stay finite."""
        out = normalize_advantages(np.array([1.0, 2.0, 3.0, 4.0]))
        assert out.mean() == pytest.approx(0.0, abs=1e-12)
        assert out.std() == pytest.approx(1.0)
        np.testing.assert_array_equal(normalize_advantages(np.full(3, 5.0)), np.zeros(3))


class TestLossAndGrads:
    """Test the total loss gradient used by the optimizer."""

    def test_finite_differences(self):
        """Gradients of the full loss, BC term included, match central differences."""
        rng = np.random.default_rng(21)
        h = 1e-5
        config = PpoConfig(entropy_coef=0.05, value_coef=0.5, clip_epsilon=0.2)
        for case in range(100):
            agent_config = AgentConfig(hidden_size=5, hidden_layers=1, shared_trunk=case % 2 == 1)
            params = init_agent(3, 3, agent_config, rng)
            params = params.with_networks(
                [n.with_arrays([a + 0.3 * rng.normal(size=a.shape) for a in n.arrays()]) for n in params.networks()]
            )
            states = rng.normal(size=(6, 3))
            actions = rng.integers(0, 3, size=6)
            current = evaluate(params, states, actions).log_probs
            mb = Minibatch(
                states=states,
                actions=actions,
                old_log_probs=current + rng.normal(scale=0.3, size=6),
                advantages=rng.normal(size=6),
                return_targets=rng.normal(size=6),
            )
            bc_sample = (rng.normal(size=(4, 3)), rng.integers(0, 3, size=4))

            breakdown, grads = loss_and_grads(params, mb, config, bc_sample, 1.0)
            assert breakdown.total == pytest.approx(breakdown.actor + 1.0 * breakdown.bc + 0.5 * breakdown.value)

            def objective(p):
                return loss_and_grads(p, mb, config, bc_sample, 1.0)[0].total

            for net, grad in zip(params.networks(), grads.groups()):
                for arr, g in zip(net.arrays(), grad.arrays()):
                    for k in range(arr.size):
                        original = arr.flat[k]
                        arr.flat[k] = original + h
                        plus = objective(params)
                        arr.flat[k] = original - h
                        minus = objective(params)
                        arr.flat[k] = original
                        numeric = (plus - minus) / (2 * h)
                        assert abs(g.flat[k] - numeric) <= 1e-4 * max(abs(g.flat[k]), abs(numeric)) + 1e-7


def rollout_for(params, rng, n=32):
    states = rng.normal(size=(n, 3))
    actions = rng.integers(0, 2, size=n)
    evaluation = evaluate(params, states, actions)
    batch = RolloutBatch(
        states=states,
        actions=actions,
        raw_rewards=rng.normal(size=n),
        shaped_rewards=np.zeros(n),
        old_log_probs=evaluation.log_probs,
        values=evaluation.values,
        dones=rng.random(n) < 0.1,
        truncated=np.zeros(n, dtype=bool),
        truncation_values=np.zeros(n),
        state_keys=list(range(n)),
    )
    batch.shaped_rewards = batch.raw_rewards.copy()
    return compute_gae(batch, PpoConfig())


class TestPpoUpdate:
    """Test the minibatch optimization loop."""

    def _setup(self, rng):
        params = init_agent(3, 2, AgentConfig(hidden_size=8), rng)
        return params, AgentOptimizer.for_agent(params), rollout_for(params, rng)

    def test_zero_learning_rate_keeps_params(self, rng):
        """With lr 0 the parameters are unchanged and the step count advances."""
        params, optimizer, batch = self._setup(rng)
        config = PpoConfig(minibatch_size=8, epochs_per_update=2)
        new_params, new_optimizer, stats = ppo_update(
            params, optimizer, batch, config, np.random.default_rng(0), 0.0
        )
        for a, b in zip(params.networks(), new_params.networks()):
            for x, y in zip(a.arrays(), b.arrays()):
                np.testing.assert_array_equal(x, y)
        assert stats.minibatch_steps == 8
        assert new_optimizer.step_count == 8

    def test_single_minibatch_matches_manual_step(self, rng):
        """One full-batch epoch equals normalize, loss_and_grads, clip and one Adam step."""
        params, optimizer, batch = self._setup(rng)
        config = PpoConfig(minibatch_size=32, epochs_per_update=1)
        new_params, _, stats = ppo_update(params, optimizer, batch, config, np.random.default_rng(4), 1e-3)

        perm = np.random.default_rng(4).permutation(32)
        mb = Minibatch(
            batch.states[perm],
            batch.actions[perm],
            batch.old_log_probs[perm],
            normalize_advantages(batch.advantages[perm]),
            batch.return_targets[perm],
        )
        breakdown, grads = loss_and_grads(params, mb, config)
        clipped, norm = clip_by_global_norm(grads.groups(), config.max_grad_norm)
        expected, _ = apply_gradients(params, AgentGrads.from_groups(clipped), optimizer, 1e-3)
        for a, b in zip(expected.networks(), new_params.networks()):
            for x, y in zip(a.arrays(), b.arrays()):
                np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)
        assert stats.total_loss == pytest.approx(breakdown.total)
        assert stats.grad_norm == pytest.approx(norm)
        assert stats.clip_fraction == 0.0

    def test_zero_weight_augmentation_is_plain_ppo(self, rng):
        """A BC weight of zero leaves the update bit-identical to plain PPO."""
        params, optimizer, batch = self._setup(rng)
        config = PpoConfig(minibatch_size=8, epochs_per_update=2)
        plain, _, plain_stats = ppo_update(params, optimizer, batch, config, np.random.default_rng(1), 1e-3)
        aux = OprAugmentation(
            lambda_bc=0.0, bc_epochs=3, sampler=BehaviorSampler(GoodEpisodeBuffer(), np.random.default_rng(2))
        )
        augmented, _, aug_stats = ppo_update(params, optimizer, batch, config, np.random.default_rng(1), 1e-3, aux)
        for a, b in zip(plain.networks(), augmented.networks()):
            for x, y in zip(a.arrays(), b.arrays()):
                np.testing.assert_array_equal(x, y)
        assert plain_stats == aug_stats

    def test_requires_advantages(self, rng):
        """Updating before compute_gae is a usage error."""
        params, optimizer, batch = self._setup(rng)
        batch.advantages = None
        with pytest.raises(DomainError):
            ppo_update(params, optimizer, batch, PpoConfig(minibatch_size=8), rng, 1e-3)

    def test_nan_advantage_halts(self, rng):
        """A NaN advantage aborts the update with NumericalError."""
        params, optimizer, batch = self._setup(rng)
        batch.advantages[3] = np.nan
        with pytest.raises(NumericalError):
            ppo_update(params, optimizer, batch, PpoConfig(minibatch_size=8), rng, 1e-3)
