# mypy: ignore-errors
"""Desk-scale learning experiments; run with ``pytest -m slow`` or scripts/run_acceptance.sh."""

import shutil
from pathlib import Path

import numpy as np
import pytest

from opr_trainer.harness import Variant, load_config, read_metrics, run_comparison, run_experiment
from opr_trainer.harness.comparison import variant_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


def final_returns(result, variant):
    return [result.row(seed, variant).final_mean_return for seed in result.seeds]


class TestDeepChainTrap:
    """Test that the long chain traps plain PPO."""

    def test_ppo_entropy_collapses(self, tmp_path):
        """Most PPO seeds fall below a tenth of the uniform entropy before 150k steps."""
        config = load_config(CONFIG_DIR / "deep_chain_20.env").model_copy(update={"total_steps": 150_000})
        collapsed = 0
        for seed in config.seeds:
            run = variant_config(config, seed, Variant.PPO)
            summary = run_experiment(run, output_dir=tmp_path / run.run_name).summary
            collapsed += summary.entropy_collapse_step is not None
        assert collapsed >= len(config.seeds) // 2 + 1


class TestDeepChainComparison:
    """Test that OPR escapes the DeepChain trap more often than plain PPO."""

    @pytest.fixture(scope="class")
    def comparison(self, tmp_path_factory):
        config = load_config(CONFIG_DIR / "deep_chain_12.env")
        return run_comparison(config, output_dir=tmp_path_factory.mktemp("deep_chain_12"), max_workers=4)

    def test_median_final_return(self, comparison):
        """OPR's median final return beats plain PPO's."""
        ppo = np.median(final_returns(comparison, Variant.PPO))
        opr = np.median(final_returns(comparison, Variant.OPR))
        assert opr > ppo

    def test_more_seeds_reach_goal(self, comparison):
        """More OPR seeds collect the terminal reward at least once."""

        def reached(variant):
            return sum(
                any((r.max_return or 0.0) >= 10.0 for r in self._records(comparison, seed, variant))
                for seed in comparison.seeds
            )

        assert reached(Variant.OPR) > reached(Variant.PPO)

    def test_entropy_collapse(self, comparison):
        """Plain PPO's entropy collapses early and OPR keeps more entropy at the same point."""
        collapsed, retained = 0, 0
        for seed in comparison.seeds:
            ppo_records = self._records(comparison, seed, Variant.PPO)
            opr_records = self._records(comparison, seed, Variant.OPR)
            collapse = next(
                (r.update_index for r in ppo_records if r.policy_entropy < 0.1 * np.log(2) and r.env_steps < 150_000),
                None,
            )
            if collapse is None:
                continue
            collapsed += 1
            if opr_records[collapse].policy_entropy > ppo_records[collapse].policy_entropy:
                retained += 1
        majority = len(comparison.seeds) // 2 + 1
        assert collapsed >= majority
        assert retained >= majority

    @staticmethod
    def _records(comparison, seed, variant):
        return read_metrics(Path(comparison.row(seed, variant).run_dir) / "metrics.jsonl")


class TestMiniDefenseComparison:
    """Test that OPR does no worse than PPO on the defense game."""

    def test_paired_improvement(self, tmp_path):
        """OPR's median is at least PPO's and most pairs improve."""
        config = load_config(CONFIG_DIR / "mini_defense.env")
        result = run_comparison(config, output_dir=tmp_path, max_workers=4)
        ppo, opr = final_returns(result, Variant.PPO), final_returns(result, Variant.OPR)
        assert np.median(opr) >= np.median(ppo)
        assert sum(o > p for o, p in zip(opr, ppo)) >= 6


class TestBundledDeterminism:
    """Test reruns and resumes on every bundled environment."""

    @pytest.mark.parametrize("preset", ["deep_chain_10", "distractor_grid", "mini_defense"])
    def test_rerun_and_resume(self, preset, tmp_path):
        """Reruns are byte-identical and a resumed run matches the uninterrupted one."""
        config = load_config(CONFIG_DIR / f"{preset}.env").model_copy(
            update={"total_steps": 20_480, "checkpoint_interval": 5}
        )
        first = run_experiment(config, output_dir=tmp_path / "first")
        second = run_experiment(config, output_dir=tmp_path / "second")
        metrics = (first.run_dir / "metrics.jsonl").read_bytes()
        assert metrics == (second.run_dir / "metrics.jsonl").read_bytes()

        resumed_dir = tmp_path / "resumed"
        (resumed_dir / "checkpoints").mkdir(parents=True)
        shutil.copy(first.run_dir / "checkpoints" / "ckpt-5.json", resumed_dir / "checkpoints" / "ckpt-5.json")
        resumed = run_experiment(config, output_dir=resumed_dir, resume=True)
        assert (resumed_dir / "metrics.jsonl").read_text().splitlines() == metrics.decode().splitlines()[5:]
        assert resumed.summary == first.summary
