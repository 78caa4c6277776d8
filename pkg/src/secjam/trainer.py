"""Off-policy actor-critic training for three algorithms: moe_gdm, gdm,
and ddpg.

Every source of randomness gets its own named substream derived from the
run seed, so a run is bit-reproducible and so that moe_gdm with a single
expert consumes exactly the same draws as gdm (mixture degeneracy).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import ScenarioConfig
from .diffusion import (
    DiffusionPolicy,
    DiffusionSchedule,
    actor_loss,
    sample_action,
    sample_action_batch,
)
from .env import JammingEnv
from .moe import MoEActor, moe_actor_update, moe_sample_action, route_batch
from .nncore import MLP, Adam, soft_update

ALGORITHMS = ("moe_gdm", "gdm", "ddpg")

# Substream tags; expert k inits from tag _EXPERT_BASE + k so that gdm and
# moe_gdm expert 0 share identical initial weights.
_ENV, _EXPLORE, _ACT, _CRITIC_INIT, _GATE_INIT = 0, 1, 2, 3, 4
_GATE_UPDATE, _ACTOR_UPDATE, _REPLAY, _TARGET_ACT, _DDPG_INIT = 5, 6, 7, 8, 9
_EXPERT_BASE = 100


def substream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag])


class TrainingDiverged(RuntimeError):
    """Raised when a loss or parameter goes non-finite during training."""

    def __init__(self, algorithm: str, seed: int, step: int, what: str, records=None):
        super().__init__(
            f"{algorithm} (seed {seed}) diverged at step {step}: {what}"
        )
        self.algorithm = algorithm
        self.seed = seed
        self.step = step
        self.records = records or []


@dataclass
class TrainConfig:
    episodes: int = 2000
    episode_length: int = 100
    gamma: float = 0.95
    tau: float = 0.005
    batch_size: int = 64
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    lr_gate: float = 1e-4
    buffer_capacity: int = 100_000
    warmup_steps: int = 1000
    explore_sigma_start: float = 0.2
    explore_sigma_end: float = 0.02
    seed: int = 1
    diffusion_steps: int = 5
    beta_start: float = 0.05
    beta_end: float = 0.7
    n_experts: int = 3
    load_balance: float = 0.01
    fixed_expert: int = -1
    critic_hidden: tuple[int, ...] = (64, 64)
    actor_hidden: tuple[int, ...] = (64, 64)
    gate_hidden: tuple[int, ...] = (32,)

    def __post_init__(self) -> None:
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.episodes < 0 or self.episode_length < 1:
            raise ValueError("episodes >= 0 and episode_length >= 1 required")
        if self.warmup_steps > max(self.episodes * self.episode_length, 0) and self.episodes > 0:
            raise ValueError("warmup_steps exceeds total steps")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity must be >= batch_size >= 1")
        if self.n_experts < 1:
            raise ValueError("n_experts must be >= 1")

    def schedule(self) -> DiffusionSchedule:
        return DiffusionSchedule(
            betas=np.linspace(self.beta_start, self.beta_end, self.diffusion_steps)
        )


@dataclass(frozen=True)
class RunRecord:
    """One training-log row: per-episode means and MoE routing counts."""

    algorithm: str
    seed: int
    episode: int
    mean_reward: float
    mean_sr_sum: float
    mean_see_sum: float
    expert_counts: tuple[int, int, int]


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer over transition arrays."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def add(self, s, a, r, s2, done) -> None:
        i = self.cursor
        self.states[i] = s
        self.actions[i] = a
        self.rewards[i] = r
        self.next_states[i] = s2
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=n)
        return Batch(
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.dones[idx],
        )


def td_target(r, next_state, done, critic_target, target_act, gamma, rng=None):
    """r if done, else r + gamma * Q_target(s', a') with a' drawn from the
    algorithm's target actor (`target_act(next_states, rng)`)."""
    if done:
        return float(r)
    ns = np.atleast_2d(np.asarray(next_state, float))
    a = np.atleast_2d(target_act(ns, rng))
    q, _ = critic_target.forward(np.concatenate([ns, a], axis=1))
    return float(r + gamma * q[0, 0])


def critic_update(batch_states, batch_actions, targets, critic: MLP):
    """MSE loss between Q(s,a) and targets, plus parameter gradients."""
    x = np.concatenate([np.atleast_2d(batch_states), np.atleast_2d(batch_actions)], axis=1)
    q, cache = critic.forward(x)
    diff = q[:, 0] - np.asarray(targets, float)
    loss = float(np.mean(diff**2))
    grads, _ = critic.backward(cache, (2.0 / len(diff)) * diff[:, None])
    return loss, grads


def ddpg_actor_update(batch_states, actor: MLP, critic: MLP):
    """-mean Q(s, actor(s)) and gradients through the critic's input
    gradient; the actor's tanh head is mapped to [0,1] via (y+1)/2."""
    states = np.atleast_2d(np.asarray(batch_states, float))
    B, sdim = states.shape
    y, cache = actor.forward(states)
    a = (y + 1.0) / 2.0
    q, q_cache = critic.forward(np.concatenate([states, a], axis=1))
    loss = -float(np.mean(q))
    _, g_in = critic.backward(q_cache, np.full_like(q, -1.0 / B))
    grads, _ = actor.backward(cache, 0.5 * g_in[:, sdim:])
    return loss, grads


class _GdmAgent:
    kind = "gdm"

    def __init__(self, state_dim, action_dim, tcfg: TrainConfig):
        sched = tcfg.schedule()
        self.policy = DiffusionPolicy(
            state_dim, action_dim, sched, hidden=tcfg.actor_hidden,
            rng=substream(tcfg.seed, _EXPERT_BASE),
        )
        self.target = DiffusionPolicy(state_dim, action_dim, sched, hidden=tcfg.actor_hidden)
        self.target.denoiser = self.policy.denoiser.copy()
        self.adam = Adam(lr=tcfg.lr_actor)

    def act(self, sv, rng):
        return sample_action(sv, self.policy, rng), 0

    def target_actions(self, next_states, rng):
        return sample_action_batch(next_states, self.target, rng, count=False)

    def update(self, states, critic, rng_actor, rng_gate):
        loss, grads = actor_loss(states, self.policy, critic, rng_actor)
        self.adam.step(self.policy.denoiser.parameters(), grads)
        return loss

    def soft_targets(self, tau):
        soft_update(self.target.denoiser, self.policy.denoiser, tau)

    @property
    def eval_count(self):
        return self.policy.eval_count

    def to_dict(self):
        return {
            "kind": "gdm",
            "betas": self.policy.schedule.betas.tolist(),
            "denoiser": self.policy.denoiser.to_dict(),
        }


class _MoeAgent:
    kind = "moe_gdm"

    def __init__(self, state_dim, action_dim, tcfg: TrainConfig):
        sched = tcfg.schedule()
        self.actor = MoEActor(
            state_dim,
            action_dim,
            sched,
            n_experts=tcfg.n_experts,
            gate_hidden=tcfg.gate_hidden,
            expert_hidden=tcfg.actor_hidden,
            gate_rng=substream(tcfg.seed, _GATE_INIT),
            expert_rngs=[
                substream(tcfg.seed, _EXPERT_BASE + k) for k in range(tcfg.n_experts)
            ],
            fixed_expert=tcfg.fixed_expert,
        )
        self.target = MoEActor(
            state_dim, action_dim, sched, n_experts=tcfg.n_experts,
            gate_hidden=tcfg.gate_hidden, expert_hidden=tcfg.actor_hidden,
            fixed_expert=tcfg.fixed_expert,
        )
        self.target.gate = self.actor.gate.copy()
        for k in range(tcfg.n_experts):
            self.target.experts[k].denoiser = self.actor.experts[k].denoiser.copy()
        self.expert_adams = [Adam(lr=tcfg.lr_actor) for _ in range(tcfg.n_experts)]
        self.gate_adam = Adam(lr=tcfg.lr_gate)
        self.load_balance = tcfg.load_balance

    def act(self, sv, rng):
        return moe_sample_action(sv, self.actor, rng)

    def target_actions(self, next_states, rng):
        routed = route_batch(next_states, self.target)
        out = np.zeros((next_states.shape[0], self.actor.action_dim))
        for k in range(self.actor.n_experts):
            idx = np.flatnonzero(routed == k)
            if idx.size:
                out[idx] = sample_action_batch(
                    next_states[idx], self.target.experts[k], rng, count=False
                )
        return out

    def update(self, states, critic, rng_actor, rng_gate):
        expert_grads, gate_grads, info = moe_actor_update(
            states, self.actor, critic, rng_actor, rng_gate, self.load_balance
        )
        for k, grads in expert_grads.items():
            self.expert_adams[k].step(
                self.actor.experts[k].denoiser.parameters(), grads
            )
        self.gate_adam.step(self.actor.gate.parameters(), gate_grads)
        if not np.isfinite(info["gate_loss"]):
            return info["gate_loss"]
        return info["actor_loss"]

    def soft_targets(self, tau):
        soft_update(self.target.gate, self.actor.gate, tau)
        for k in range(self.actor.n_experts):
            soft_update(
                self.target.experts[k].denoiser,
                self.actor.experts[k].denoiser,
                tau,
            )

    @property
    def eval_count(self):
        return self.actor.eval_count

    def to_dict(self):
        return {
            "kind": "moe_gdm",
            "betas": self.actor.schedule.betas.tolist(),
            "gate": self.actor.gate.to_dict(),
            "fixed_expert": self.actor.fixed_expert,
            "experts": [e.denoiser.to_dict() for e in self.actor.experts],
        }


class _DdpgAgent:
    kind = "ddpg"

    def __init__(self, state_dim, action_dim, tcfg: TrainConfig):
        self.actor = MLP(
            [state_dim, *tcfg.actor_hidden, action_dim],
            output="tanh",
            rng=substream(tcfg.seed, _DDPG_INIT),
        )
        self.target = self.actor.copy()
        self.adam = Adam(lr=tcfg.lr_actor)
        self.eval_count = 0

    def act(self, sv, rng):
        y, _ = self.actor.forward(sv)
        return (y + 1.0) / 2.0, 0

    def target_actions(self, next_states, rng):
        y, _ = self.target.forward(next_states)
        return (y + 1.0) / 2.0

    def update(self, states, critic, rng_actor, rng_gate):
        loss, grads = ddpg_actor_update(states, self.actor, critic)
        self.adam.step(self.actor.parameters(), grads)
        return loss

    def soft_targets(self, tau):
        soft_update(self.target, self.actor, tau)

    def to_dict(self):
        return {"kind": "ddpg", "net": self.actor.to_dict()}


def make_agent(algorithm: str, state_dim: int, action_dim: int, tcfg: TrainConfig):
    if algorithm == "gdm":
        return _GdmAgent(state_dim, action_dim, tcfg)
    if algorithm == "moe_gdm":
        return _MoeAgent(state_dim, action_dim, tcfg)
    if algorithm == "ddpg":
        return _DdpgAgent(state_dim, action_dim, tcfg)
    raise ValueError(f"unknown algorithm {algorithm!r}")


class PolicySampler:
    """Deterministic action sampler reconstructed from a checkpoint."""

    def __init__(self, d: dict):
        kind = d["kind"]
        self.kind = kind
        if kind == "ddpg":
            self.net = MLP.from_dict(d["net"])
        elif kind == "gdm":
            sched = DiffusionSchedule(betas=np.asarray(d["betas"]))
            den = MLP.from_dict(d["denoiser"])
            sdim = den.widths[0] - den.widths[-1] - 8
            self.policy = DiffusionPolicy(sdim, den.widths[-1], sched)
            self.policy.denoiser = den
        elif kind == "moe_gdm":
            sched = DiffusionSchedule(betas=np.asarray(d["betas"]))
            dens = [MLP.from_dict(e) for e in d["experts"]]
            sdim = dens[0].widths[0] - dens[0].widths[-1] - 8
            self.moe = MoEActor(
                sdim, dens[0].widths[-1], sched, n_experts=len(dens),
                fixed_expert=d.get("fixed_expert", -1),
            )
            self.moe.gate = MLP.from_dict(d["gate"])
            for k, den in enumerate(dens):
                self.moe.experts[k].denoiser = den
        else:
            raise ValueError(f"unknown checkpoint kind {kind!r}")

    def sample(self, state_vec: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "ddpg":
            y, _ = self.net.forward(state_vec)
            return (y + 1.0) / 2.0
        if self.kind == "gdm":
            return sample_action(state_vec, self.policy, rng, count=False)
        a, _ = moe_sample_action(state_vec, self.moe, rng, count=False)
        return a


def train(
    algorithm: str,
    tcfg: TrainConfig,
    scenario: ScenarioConfig,
    reward_weight: float = 1.0,
    freeze_channel: bool = False,
) -> tuple[list[RunRecord], dict, dict]:
    """Run one seeded training run.

    Returns (per-episode records, checkpoint dict, diagnostics). Raises
    TrainingDiverged on non-finite losses or parameters.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    seed = tcfg.seed
    rng_env = substream(seed, _ENV)
    rng_explore = substream(seed, _EXPLORE)
    rng_act = substream(seed, _ACT)
    rng_actor_upd = substream(seed, _ACTOR_UPDATE)
    rng_gate_upd = substream(seed, _GATE_UPDATE)
    rng_replay = substream(seed, _REPLAY)
    rng_target = substream(seed, _TARGET_ACT)

    env = JammingEnv(
        scenario,
        rng_env,
        episode_length=tcfg.episode_length,
        reward_weight=reward_weight,
        freeze_channel=freeze_channel,
    )
    sdim, adim = env.state_dim, env.action_dim
    agent = make_agent(algorithm, sdim, adim, tcfg)
    critic = MLP(
        [sdim + adim, *tcfg.critic_hidden, 1], rng=substream(seed, _CRITIC_INIT)
    )
    critic_target = critic.copy()
    critic_adam = Adam(lr=tcfg.lr_critic)
    buffer = ReplayBuffer(tcfg.buffer_capacity, sdim, adim)

    total_planned = max(tcfg.episodes * tcfg.episode_length, 1)
    records: list[RunRecord] = []
    step_count = 0
    policy_actions = 0

    for episode in range(tcfg.episodes):
        state = env.reset()
        ep_rewards = np.zeros(tcfg.episode_length)
        ep_sr = np.zeros(tcfg.episode_length)
        ep_see = np.zeros(tcfg.episode_length)
        counts = [0, 0, 0]
        for i in range(tcfg.episode_length):
            sv = state.vector()
            if step_count < tcfg.warmup_steps:
                a = rng_explore.uniform(0.0, 1.0, adim)
            else:
                a, k = agent.act(sv, rng_act)
                policy_actions += 1
                if agent.kind == "moe_gdm" and k < 3:
                    counts[k] += 1
                frac = min(step_count / total_planned, 1.0)
                sigma = tcfg.explore_sigma_start + frac * (
                    tcfg.explore_sigma_end - tcfg.explore_sigma_start
                )
                a = np.clip(a + rng_explore.normal(0.0, sigma, adim), 0.0, 1.0)
            next_state, r, done, metrics = env.step(a)
            buffer.add(sv, a, r, next_state.vector(), done)
            ep_rewards[i] = r
            ep_sr[i] = metrics.sr_sum
            ep_see[i] = metrics.see_sum
            if step_count >= tcfg.warmup_steps and buffer.size >= tcfg.batch_size:
                batch = buffer.sample(tcfg.batch_size, rng_replay)
                a_next = agent.target_actions(batch.next_states, rng_target)
                q_next, _ = critic_target.forward(
                    np.concatenate([batch.next_states, a_next], axis=1)
                )
                y = batch.rewards + tcfg.gamma * (1.0 - batch.dones) * q_next[:, 0]
                closs, cgrads = critic_update(batch.states, batch.actions, y, critic)
                if not np.isfinite(closs):
                    raise TrainingDiverged(
                        algorithm, seed, step_count, "critic loss", records
                    )
                critic_adam.step(critic.parameters(), cgrads)
                aloss = agent.update(batch.states, critic, rng_actor_upd, rng_gate_upd)
                if not np.isfinite(aloss):
                    raise TrainingDiverged(
                        algorithm, seed, step_count, "actor loss", records
                    )
                soft_update(critic_target, critic, tcfg.tau)
                agent.soft_targets(tcfg.tau)
            step_count += 1
            state = next_state
        records.append(
            RunRecord(
                algorithm=algorithm,
                seed=seed,
                episode=episode,
                mean_reward=float(np.mean(ep_rewards)),
                mean_sr_sum=float(np.mean(ep_sr)),
                mean_see_sum=float(np.mean(ep_see)),
                expert_counts=tuple(counts),
            )
        )

    checkpoint = {
        "format": "secjam-agent-v1",
        "algorithm": algorithm,
        "seed": seed,
        "critic": critic.to_dict(),
        "actor": agent.to_dict(),
    }
    diagnostics = {
        "clamp_count": env.clamp_count,
        "denoiser_evals": agent.eval_count,
        "policy_actions": policy_actions,
        "steps": step_count,
    }
    return records, checkpoint, diagnostics
