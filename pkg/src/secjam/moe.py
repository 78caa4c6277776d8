"""Mixture-of-experts diffusion actor.

A gate network placed after the state input routes each state to exactly
one of K independent expert denoisers (top-1 hard routing), so per-action
compute matches a single diffusion policy. The gate is trained with a
softmax-weighted critic-value surrogate over stop-gradient expert actions,
plus a small load-balance penalty on the batch's mean gate probabilities.
"""

from __future__ import annotations

import numpy as np

from .diffusion import (
    DiffusionPolicy,
    DiffusionSchedule,
    actor_loss_frozen,
    chain_with_noise,
    draw_chain_noise,
    sample_action,
)
from .nncore import MLP


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


class MoEActor:
    """Gate + K whole-denoiser experts sharing one schedule."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        schedule: DiffusionSchedule,
        n_experts: int = 3,
        gate_hidden: tuple[int, ...] = (32,),
        expert_hidden: tuple[int, ...] = (64, 64),
        gate_rng: np.random.Generator | None = None,
        expert_rngs: list[np.random.Generator] | None = None,
        fixed_expert: int = -1,
    ):
        if n_experts < 1:
            raise ValueError("need at least one expert")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.n_experts = n_experts
        self.fixed_expert = fixed_expert
        self.gate = MLP([state_dim, *gate_hidden, n_experts], rng=gate_rng)
        self.experts = [
            DiffusionPolicy(
                state_dim,
                action_dim,
                schedule,
                hidden=expert_hidden,
                rng=expert_rngs[k] if expert_rngs else None,
            )
            for k in range(n_experts)
        ]

    @property
    def schedule(self) -> DiffusionSchedule:
        return self.experts[0].schedule

    @property
    def eval_count(self) -> int:
        return sum(e.eval_count for e in self.experts)


def route(state, actor: MoEActor) -> tuple[int, np.ndarray]:
    """Top-1 routing: argmax of the gate softmax, ties to the lowest index."""
    logits, _ = actor.gate.forward(np.asarray(state, float))
    probs = softmax(logits)
    if actor.fixed_expert >= 0:
        return actor.fixed_expert, probs
    return int(np.argmax(logits)), probs


def route_batch(states: np.ndarray, actor: MoEActor) -> np.ndarray:
    logits, _ = actor.gate.forward(states)
    if actor.fixed_expert >= 0:
        return np.full(states.shape[0], actor.fixed_expert, dtype=int)
    return np.argmax(logits, axis=1)


def moe_sample_action(
    state, actor: MoEActor, rng: np.random.Generator, count: bool = True
) -> tuple[np.ndarray, int]:
    """Sample from the routed expert; returns the expert index for logging."""
    k, _ = route(state, actor)
    return sample_action(state, actor.experts[k], rng, count=count), k


def gate_loss_and_grads(
    states: np.ndarray,
    gate: MLP,
    q_vals: np.ndarray,
    load_balance: float,
) -> tuple[float, list[np.ndarray], np.ndarray]:
    """Gate surrogate loss, its parameter gradients, and the batch-mean
    probabilities. q_vals holds per-(state, expert) critic values and is
    treated as constant (stop-gradient actions)."""
    B, K = q_vals.shape
    logits, cache = gate.forward(states)
    probs = softmax(logits)
    f = probs.mean(axis=0)
    loss = -float(np.mean(np.sum(probs * q_vals, axis=1)))
    loss += load_balance * float(np.sum((f - 1.0 / K) ** 2))
    # d(-mean_s p.Q)/dlogits through the softmax Jacobian
    inner = np.sum(probs * q_vals, axis=1, keepdims=True)
    d_logits = -(probs * (q_vals - inner)) / B
    if load_balance > 0.0:
        c = 2.0 * load_balance * (f - 1.0 / K)
        d_logits += probs * (c - np.sum(probs * c, axis=1, keepdims=True)) / B
    grads, _ = gate.backward(cache, d_logits)
    return loss, grads, f


def moe_actor_update(
    states: np.ndarray,
    actor: MoEActor,
    critic: MLP,
    rng_experts: np.random.Generator,
    rng_gate: np.random.Generator,
    load_balance: float = 0.01,
):
    """Gradients for the experts and the gate on one batch of states.

    Expert side: each state contributes a diffusion actor-loss gradient to
    its routed expert only. Gate side: loss = -mean_s sum_k p_k(s) Q(s,a_k)
    with a_k sampled per expert under shared frozen noise and treated as
    constants, plus load_balance * sum_k (f_k - 1/K)^2 on the batch-mean
    gate probabilities f_k.

    Returns (expert_grads: dict expert->grad list, gate_grads, info dict).
    """
    states = np.atleast_2d(np.asarray(states, float))
    B, K = states.shape[0], actor.n_experts

    routed = route_batch(states, actor)
    expert_grads: dict[int, list[np.ndarray]] = {}
    actor_loss_total = 0.0
    for k in range(K):
        idx = np.flatnonzero(routed == k)
        if idx.size == 0:
            continue
        sub = states[idx]
        x_T, zs = draw_chain_noise(idx.size, actor.experts[k], rng_experts)
        loss_k, grads_k = actor_loss_frozen(sub, actor.experts[k], critic, x_T, zs)
        # each expert trains at full strength on its own routed states
        expert_grads[k] = grads_k
        actor_loss_total += loss_k * (idx.size / B)

    # Gate surrogate: per-state expert actions under shared frozen noise.
    x_T, zs = draw_chain_noise(B, actor.experts[0], rng_gate)
    q_vals = np.zeros((B, K))
    for k in range(K):
        a_k, _, _ = chain_with_noise(states, actor.experts[k], x_T, zs)
        q, _ = critic.forward(np.concatenate([states, a_k], axis=1))
        q_vals[:, k] = q[:, 0]
    gate_loss, gate_grads, f = gate_loss_and_grads(
        states, actor.gate, q_vals, load_balance
    )

    info = {
        "routed": routed,
        "gate_loss": gate_loss,
        "actor_loss": actor_loss_total,
        "gate_probs_mean": f,
    }
    return expert_grads, gate_grads, info
