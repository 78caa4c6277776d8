"""Brute-force grid search over static power allocations on a frozen
channel -- the ground truth the trained policies are measured against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, ScenarioConfig
from .secrecy import PowerAllocation, reward
from .trainer import PolicySampler, substream

EVAL_BUDGET = 10_000_000


@dataclass(frozen=True)
class OracleResult:
    best_allocation: np.ndarray
    best_reward: float
    grid_resolution: int
    evaluations: int


@dataclass(frozen=True)
class GapResult:
    mean_reward: float
    best_reward: float
    ratio: float | None  # None marks the degenerate best_reward == 0 case

    @property
    def degenerate(self) -> bool:
        return self.ratio is None


def grid_search(
    ch: ChannelRealization,
    cfg: ScenarioConfig,
    resolution: int = 21,
    weight: float = 1.0,
    budget: int = EVAL_BUDGET,
) -> OracleResult:
    """Evaluate the reward at every point of the uniform power grid
    {0, ..., p_max}^n_aps and return the argmax.

    Ties are broken by lowest total power, then lexicographically.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    n = cfg.n_aps
    total = resolution**n
    if total > budget:
        raise ValueError(f"{total} evaluations exceed budget {budget}")
    axis = np.linspace(0.0, cfg.p_max, resolution)
    best_r = -np.inf
    best_p = None
    for combo in itertools.product(axis, repeat=n):
        p = np.array(combo)
        r, _ = reward(PowerAllocation(p=p), ch, cfg, weight)
        if r > best_r:
            best_r, best_p = r, p
        elif r == best_r:
            # lowest total power, then lexicographic
            if p.sum() < best_p.sum() or (
                p.sum() == best_p.sum() and tuple(p) < tuple(best_p)
            ):
                best_p = p
    return OracleResult(
        best_allocation=best_p,
        best_reward=float(best_r),
        grid_resolution=resolution,
        evaluations=total,
    )


def policy_gap(
    checkpoint_actor: dict,
    ch: ChannelRealization,
    cfg: ScenarioConfig,
    weight: float = 1.0,
    resolution: int = 21,
    n_draws: int = 100,
    episode_length: int = 100,
) -> GapResult:
    """Mean trained-policy reward on the frozen channel over `n_draws`
    deterministically seeded action draws, divided by the grid-search
    optimum.

    The policy sees the same state encoding the environment produces
    (frozen gains, all-zero previous action).
    """
    from .env import default_norm_constants, normalize_gains

    oracle = grid_search(ch, cfg, resolution=resolution, weight=weight)
    sampler = PolicySampler(checkpoint_actor)
    mu, sigma = default_norm_constants(cfg)
    state = np.concatenate([normalize_gains(ch, mu, sigma), np.zeros(cfg.n_aps)])
    rewards = np.zeros(n_draws)
    for i in range(n_draws):
        a = sampler.sample(state, np.random.default_rng(i))
        r, _ = reward(PowerAllocation(p=a * cfg.p_max), ch, cfg, weight)
        rewards[i] = r
    mean_r = float(np.mean(rewards))
    if oracle.best_reward == 0.0:
        return GapResult(mean_reward=mean_r, best_reward=0.0, ratio=None)
    return GapResult(
        mean_reward=mean_r,
        best_reward=oracle.best_reward,
        ratio=mean_r / oracle.best_reward,
    )


def frozen_channel(cfg: ScenarioConfig, seed: int) -> ChannelRealization:
    """The frozen realization a freeze-channel training run with this seed
    uses (the environment draws it once, up front, from its env stream)."""
    from .channel import realize_channel

    return realize_channel(cfg, substream(seed, 0))
