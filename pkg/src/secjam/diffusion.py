"""Conditional denoising diffusion policy.

Actions are generated by a short reverse-diffusion chain conditioned on the
environment state, squashed into [0,1]^n_aps with tanh at the very end.
The actor is trained by backpropagating a critic's action-value through the
whole reparameterized chain (noise draws frozen).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nncore import MLP

TIME_EMBED_DIM = 8


@dataclass(frozen=True)
class DiffusionSchedule:
    """Noise schedule over T denoising steps.

    betas are strictly increasing in (0,1); alpha_bars[t] = prod(1-beta_s)
    for s <= t, with alpha_bars[0] = 1 by convention.
    """

    betas: np.ndarray
    alphas: np.ndarray = field(init=False)
    alpha_bars: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        b = np.asarray(self.betas, dtype=float)
        if b.ndim != 1 or len(b) < 1:
            raise ValueError("betas must be a nonempty vector")
        if np.any(b <= 0) or np.any(b >= 1):
            raise ValueError("betas must lie in (0, 1)")
        if np.any(np.diff(b) <= 0):
            raise ValueError("betas must be strictly increasing")
        a = 1.0 - b
        abar = np.concatenate([[1.0], np.cumprod(a)])
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "alpha_bars", abar)

    @property
    def T(self) -> int:
        return len(self.betas)

    @classmethod
    def default(cls, T: int = 5, beta_start: float = 0.05, beta_end: float = 0.7):
        return cls(betas=np.linspace(beta_start, beta_end, T))


def time_embedding(t: int, T: int) -> np.ndarray:
    """8-d sinusoidal embedding of the normalized step index t/T."""
    x = np.pi * t / T
    freqs = np.array([1.0, 2.0, 4.0, 8.0])
    return np.concatenate([np.sin(freqs * x), np.cos(freqs * x)])


class DiffusionPolicy:
    """Denoiser network plus schedule; also tracks denoiser-eval counts for
    the compute-parity instrumentation (counted only while acting)."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        schedule: DiffusionSchedule,
        hidden: tuple[int, ...] = (64, 64),
        rng: np.random.Generator | None = None,
    ):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.schedule = schedule
        widths = [action_dim + TIME_EMBED_DIM + state_dim, *hidden, action_dim]
        self.denoiser = MLP(widths, output="identity", rng=rng)
        self.eval_count = 0
        self._emb = [time_embedding(t, schedule.T) for t in range(schedule.T + 1)]

    def denoise(self, x_t: np.ndarray, t: int, states: np.ndarray, count: bool = False):
        """Predicted noise for a batch of (x_t, state) pairs at step t."""
        B = x_t.shape[0]
        a, s = self.action_dim, self.state_dim
        inp = np.empty((B, a + TIME_EMBED_DIM + s))
        inp[:, :a] = x_t
        inp[:, a : a + TIME_EMBED_DIM] = self._emb[t]
        inp[:, a + TIME_EMBED_DIM :] = states
        if count:
            self.eval_count += B
        return self.denoiser.forward(inp)


def forward_diffuse(x0, t: int, eps, sched: DiffusionSchedule):
    """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    if not 1 <= t <= sched.T:
        raise ValueError(f"t={t} outside 1..{sched.T}")
    ab = sched.alpha_bars[t]
    return np.sqrt(ab) * np.asarray(x0, float) + np.sqrt(1.0 - ab) * np.asarray(eps, float)


def reverse_step(
    x_t,
    t: int,
    state,
    policy: DiffusionPolicy,
    rng: np.random.Generator,
    count: bool = False,
):
    """One posterior-mean denoising step with sigma_t = sqrt(beta_t) noise.

    The noise injection is suppressed at t=1 so the final step is
    deterministic.
    """
    if not 1 <= t <= policy.schedule.T:
        raise ValueError(f"t={t} outside 1..{policy.schedule.T}")
    x_t = np.atleast_2d(np.asarray(x_t, float))
    state = np.atleast_2d(np.asarray(state, float))
    eps_hat, _ = policy.denoise(x_t, t, state, count=count)
    s = policy.schedule
    mean = (x_t - (s.betas[t - 1] / np.sqrt(1.0 - s.alpha_bars[t])) * eps_hat) / np.sqrt(
        s.alphas[t - 1]
    )
    if t > 1:
        mean = mean + np.sqrt(s.betas[t - 1]) * rng.standard_normal(x_t.shape)
    return mean


def squash(x0: np.ndarray) -> np.ndarray:
    """Map unconstrained x0 into the normalized action box [0,1]."""
    return (np.tanh(x0) + 1.0) / 2.0


def sample_action(
    state,
    policy: DiffusionPolicy,
    rng: np.random.Generator,
    count: bool = True,
) -> np.ndarray:
    """Draw one normalized action by running the full reverse chain."""
    single = np.asarray(state).ndim == 1
    state = np.atleast_2d(np.asarray(state, float))
    B = state.shape[0]
    x = rng.standard_normal((B, policy.action_dim))
    for t in range(policy.schedule.T, 0, -1):
        x = reverse_step(x, t, state, policy, rng, count=count)
    a = squash(x)
    return a[0] if single else a


def sample_action_batch(
    states: np.ndarray,
    policy: DiffusionPolicy,
    rng: np.random.Generator,
    count: bool = False,
) -> np.ndarray:
    """Batched chain sampling (one shared rng stream, batch draws)."""
    states = np.atleast_2d(np.asarray(states, float))
    x = rng.standard_normal((states.shape[0], policy.action_dim))
    for t in range(policy.schedule.T, 0, -1):
        x = reverse_step(x, t, states, policy, rng, count=count)
    return squash(x)


def chain_with_noise(
    states: np.ndarray,
    policy: DiffusionPolicy,
    x_T: np.ndarray,
    zs: dict[int, np.ndarray],
):
    """Run the reverse chain with externally frozen noise draws.

    Returns (actions, per-step denoiser caches, per-step x_t values) so the
    caller can backpropagate through the chain.
    """
    s = policy.schedule
    caches = {}
    xs = {s.T: x_T}
    x = x_T
    for t in range(s.T, 0, -1):
        eps_hat, cache = policy.denoise(x, t, states)
        caches[t] = cache
        x = (x - (s.betas[t - 1] / np.sqrt(1.0 - s.alpha_bars[t])) * eps_hat) / np.sqrt(
            s.alphas[t - 1]
        )
        if t > 1:
            x = x + np.sqrt(s.betas[t - 1]) * zs[t]
        xs[t - 1] = x
    return squash(x), caches, xs


def draw_chain_noise(
    B: int, policy: DiffusionPolicy, rng: np.random.Generator
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Frozen noise for one chain run, drawn in the same order the chain
    consumes it (x_T first, then z_t for t = T..2)."""
    x_T = rng.standard_normal((B, policy.action_dim))
    zs = {
        t: rng.standard_normal((B, policy.action_dim))
        for t in range(policy.schedule.T, 1, -1)
    }
    return x_T, zs


def actor_loss(
    states: np.ndarray,
    policy: DiffusionPolicy,
    critic: MLP,
    rng: np.random.Generator,
) -> tuple[float, list[np.ndarray]]:
    """-mean Q(s, chain(s)) and its gradients w.r.t. the denoiser.

    Noise draws are frozen constants; gradients flow through the full
    reparameterized reverse chain. The critic is not updated here.
    """
    states = np.atleast_2d(np.asarray(states, float))
    B = states.shape[0]
    x_T, zs = draw_chain_noise(B, policy, rng)
    return actor_loss_frozen(states, policy, critic, x_T, zs)


def actor_loss_frozen(
    states: np.ndarray,
    policy: DiffusionPolicy,
    critic: MLP,
    x_T: np.ndarray,
    zs: dict[int, np.ndarray],
) -> tuple[float, list[np.ndarray]]:
    """actor_loss with the chain noise supplied by the caller."""
    s = policy.schedule
    B = states.shape[0]
    actions, caches, xs = chain_with_noise(states, policy, x_T, zs)
    q_in = np.concatenate([states, actions], axis=1)
    q, q_cache = critic.forward(q_in)
    loss = -float(np.mean(q))
    # dL/da via the critic's input gradient; critic params are untouched.
    _, g_in = critic.backward(q_cache, np.full_like(q, -1.0 / B))
    g = g_in[:, states.shape[1]:]
    # through the squash
    g = g * 0.5 * (1.0 - np.tanh(xs[0]) ** 2)
    param_grads = [np.zeros_like(p) for p in policy.denoiser.parameters()]
    for t in range(1, s.T + 1):
        c1 = 1.0 / np.sqrt(s.alphas[t - 1])
        c2 = s.betas[t - 1] / np.sqrt(1.0 - s.alpha_bars[t])
        pg, g_inp = policy.denoiser.backward(caches[t], -c1 * c2 * g)
        for acc, gi in zip(param_grads, pg):
            acc += gi
        g = c1 * g + g_inp[:, : policy.action_dim]
    return loss, param_grads
