import numpy as np
import pytest

from secjam.channel import ScenarioConfig
from secjam.gradcheck import check_critic_loss, check_ddpg_actor
from secjam.nncore import MLP, soft_update
from secjam.trainer import (
    ALGORITHMS,
    PolicySampler,
    ReplayBuffer,
    TrainConfig,
    TrainingDiverged,
    critic_update,
    ddpg_actor_update,
    make_agent,
    substream,
    td_target,
    train,
)


def tiny_cfg(**kw):
    defaults = dict(
        episodes=3,
        episode_length=20,
        warmup_steps=20,
        batch_size=8,
        buffer_capacity=1000,
        seed=1,
    )
    defaults.update(kw)
    return TrainConfig(**defaults)


class TestTrainConfig:
    def test_defaults_valid(self):
        cfg = TrainConfig()
        assert cfg.episodes == 2000
        assert cfg.schedule().T == 5

    @pytest.mark.parametrize(
        "kw",
        [
            {"gamma": 0.0},
            {"gamma": 1.0},
            {"tau": 0.0},
            {"episode_length": 0},
            {"episodes": -1},
            {"batch_size": 0},
            {"buffer_capacity": 8, "batch_size": 16},
            {"n_experts": 0},
            {"episodes": 1, "episode_length": 10, "warmup_steps": 50},
        ],
    )
    def test_invalid_configs(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)


class TestSubstreams:
    def test_named_streams_independent_and_reproducible(self):
        a = substream(1, 0).standard_normal(4)
        b = substream(1, 0).standard_normal(4)
        c = substream(1, 1).standard_normal(4)
        d = substream(2, 0).standard_normal(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)


class ConstantCritic:
    """Q(s,a) = c for any input."""

    def __init__(self, c):
        self.c = c

    def forward(self, x):
        return np.full((np.atleast_2d(x).shape[0], 1), self.c), None


class TestTdTarget:
    def test_done_returns_reward(self):
        y = td_target(3.5, np.zeros(4), True, ConstantCritic(99.0),
                      lambda ns, rng: np.zeros((1, 2)), 0.9)
        assert y == 3.5

    def test_bootstrap_value(self):
        y = td_target(1.0, np.zeros(4), False, ConstantCritic(10.0),
                      lambda ns, rng: np.zeros((1, 2)), 0.9)
        assert y == pytest.approx(1.0 + 0.9 * 10.0)

    def test_target_action_is_used(self):
        # critic returns sum of its input, so the action value shows up
        class SumCritic:
            def forward(self, x):
                return np.sum(x, axis=1, keepdims=True), None

        y = td_target(0.0, np.zeros(4), False, SumCritic(),
                      lambda ns, rng: np.array([[0.25, 0.75]]), 1.0)
        assert y == pytest.approx(1.0)


class TestCriticUpdate:
    def test_perfect_fit_zero_loss_zero_grads(self):
        critic = MLP([3, 1])  # zero net: Q = 0 everywhere
        states = np.random.default_rng(0).standard_normal((5, 2))
        actions = np.random.default_rng(1).uniform(size=(5, 1))
        loss, grads = critic_update(states, actions, np.zeros(5), critic)
        assert loss == 0.0
        for g in grads:
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_scalar_hand_value(self):
        # Q = 0, target = 2 on one sample: loss 4, d/db = 2*(0-2) = -4
        critic = MLP([2, 1])
        loss, grads = critic_update(np.array([[1.0]]), np.array([[1.0]]),
                                    np.array([2.0]), critic)
        assert loss == pytest.approx(4.0)
        np.testing.assert_allclose(grads[1], [-4.0])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        critic = MLP([6, 16, 1], rng=rng)
        states = rng.standard_normal((8, 4))
        actions = rng.uniform(size=(8, 2))
        targets = rng.standard_normal(8)
        assert check_critic_loss(critic, states, actions, targets) <= 1e-4


class TestDdpgActorUpdate:
    def test_constant_critic_zero_gradients(self):
        actor = MLP([4, 8, 2], output="tanh", rng=np.random.default_rng(0))
        critic = MLP([6, 1])  # zero net
        states = np.random.default_rng(1).standard_normal((5, 4))
        loss, grads = ddpg_actor_update(states, actor, critic)
        assert loss == 0.0
        for g in grads:
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        actor = MLP([4, 8, 2], output="tanh", rng=rng)
        critic = MLP([6, 16, 1], rng=rng)
        states = rng.standard_normal((6, 4))
        assert check_ddpg_actor(actor, critic, states) <= 1e-4

    def test_descent_direction(self):
        rng = np.random.default_rng(5)
        actor = MLP([4, 8, 2], output="tanh", rng=rng)
        critic = MLP([6, 16, 1], rng=rng)
        states = rng.standard_normal((6, 4))
        loss0, grads = ddpg_actor_update(states, actor, critic)
        for p, g in zip(actor.parameters(), grads):
            p -= 1e-3 * g
        loss1, _ = ddpg_actor_update(states, actor, critic)
        assert loss1 < loss0


class TestReplayBuffer:
    def test_stores_and_samples_members(self):
        buf = ReplayBuffer(10, 2, 1)
        for i in range(5):
            buf.add([i, i], [i], float(i), [i + 1, i + 1], i == 4)
        assert buf.size == 5
        batch = buf.sample(20, np.random.default_rng(0))
        assert set(batch.rewards.tolist()) <= {0.0, 1.0, 2.0, 3.0, 4.0}
        np.testing.assert_array_equal(batch.states[:, 0], batch.rewards)

    def test_wraparound_overwrites_oldest(self):
        buf = ReplayBuffer(3, 1, 1)
        for i in range(5):
            buf.add([i], [0.0], float(i), [0.0], False)
        assert buf.size == 3
        assert sorted(buf.rewards.tolist()) == [2.0, 3.0, 4.0]

    def test_empty_sample_raises(self):
        buf = ReplayBuffer(3, 1, 1)
        with pytest.raises(ValueError):
            buf.sample(1, np.random.default_rng(0))


class TestSoftTargets:
    def test_geometric_contraction(self):
        src = MLP([2, 2], rng=np.random.default_rng(0))
        dst = MLP([2, 2])
        gap0 = np.abs(dst.W[0] - src.W[0]).max()
        soft_update(dst, src, 0.1)
        gap1 = np.abs(dst.W[0] - src.W[0]).max()
        assert gap1 == pytest.approx(0.9 * gap0, rel=1e-12)


class TestTrainLoop:
    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            train("sac", tiny_cfg(), ScenarioConfig())

    def test_zero_episodes(self):
        records, ckpt, diag = train("ddpg", tiny_cfg(episodes=0), ScenarioConfig())
        assert records == []
        assert diag["steps"] == 0
        assert ckpt["format"] == "secjam-agent-v1"

    @pytest.mark.parametrize("algorithm", ALGORITHMS)
    def test_short_run_shape_and_determinism(self, algorithm):
        cfg = tiny_cfg()
        r1, c1, d1 = train(algorithm, cfg, ScenarioConfig())
        r2, _, _ = train(algorithm, cfg, ScenarioConfig())
        assert len(r1) == cfg.episodes
        assert [rec.mean_reward for rec in r1] == [rec.mean_reward for rec in r2]
        assert all(np.isfinite(rec.mean_reward) for rec in r1)
        assert d1["clamp_count"] == 0
        assert d1["steps"] == cfg.episodes * cfg.episode_length

    def test_expert_counts_zero_for_non_moe(self):
        for algorithm in ("gdm", "ddpg"):
            records, _, _ = train(algorithm, tiny_cfg(), ScenarioConfig())
            assert all(rec.expert_counts == (0, 0, 0) for rec in records)

    def test_moe_expert_counts_cover_policy_actions(self):
        cfg = tiny_cfg()
        records, _, diag = train("moe_gdm", cfg, ScenarioConfig())
        total = sum(sum(rec.expert_counts) for rec in records)
        assert total == diag["policy_actions"]

    def test_compute_parity_between_moe_and_gdm(self):
        cfg = tiny_cfg()
        _, _, d_moe = train("moe_gdm", cfg, ScenarioConfig())
        _, _, d_gdm = train("gdm", cfg, ScenarioConfig())
        assert d_moe["policy_actions"] == d_gdm["policy_actions"]
        assert d_moe["denoiser_evals"] == d_gdm["denoiser_evals"]
        assert d_moe["denoiser_evals"] == 5 * d_moe["policy_actions"]

    def test_mixture_degeneracy_single_expert(self):
        # One expert with no load-balance pressure replays gdm exactly.
        cfg_moe = tiny_cfg(n_experts=1, load_balance=0.0)
        cfg_gdm = tiny_cfg()
        r_moe, _, _ = train("moe_gdm", cfg_moe, ScenarioConfig())
        r_gdm, _, _ = train("gdm", cfg_gdm, ScenarioConfig())
        for a, b in zip(r_moe, r_gdm):
            assert a.mean_reward == b.mean_reward
            assert a.mean_sr_sum == b.mean_sr_sum
            assert a.mean_see_sum == b.mean_see_sum

    def test_frozen_channel_mode(self):
        records, _, _ = train(
            "ddpg", tiny_cfg(), ScenarioConfig(), freeze_channel=True
        )
        assert all(np.isfinite(rec.mean_reward) for rec in records)


class TestPolicySampler:
    @pytest.mark.parametrize("algorithm", ALGORITHMS)
    def test_checkpoint_round_trip(self, algorithm):
        cfg = tiny_cfg()
        _, ckpt, _ = train(algorithm, cfg, ScenarioConfig())
        sampler = PolicySampler(ckpt["actor"])
        agent = make_agent(algorithm, 18, 3, cfg)
        # overwrite the fresh agent with checkpoint weights via the sampler
        sv = np.random.default_rng(0).standard_normal(18)
        a1 = sampler.sample(sv, np.random.default_rng(1))
        a2 = sampler.sample(sv, np.random.default_rng(1))
        np.testing.assert_array_equal(a1, a2)
        assert a1.shape == (3,)
        assert np.all(a1 >= 0.0) and np.all(a1 <= 1.0)

    def test_round_trip_matches_trained_agent(self):
        cfg = tiny_cfg()
        records, ckpt, _ = train("gdm", cfg, ScenarioConfig())
        sampler = PolicySampler(ckpt["actor"])
        from secjam.diffusion import sample_action

        sv = np.random.default_rng(0).standard_normal(18)
        a_ckpt = sampler.sample(sv, np.random.default_rng(2))
        a_net = sample_action(sv, sampler.policy, np.random.default_rng(2),
                              count=False)
        np.testing.assert_array_equal(a_ckpt, a_net)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PolicySampler({"kind": "mystery"})
