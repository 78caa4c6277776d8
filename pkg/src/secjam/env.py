"""RL environment over the friendly-jamming scenario.

States are flattened, log-normalized channel gains plus the previous
normalized action. Actions are normalized per-AP powers in [0,1]; watts
exist only inside the environment. Fading is i.i.d. per step (block
fading) unless the channel is frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, ScenarioConfig, realize_channel
from .secrecy import PowerAllocation, SecrecyMetrics, reward as secrecy_reward

GAIN_FLOOR = 1e-15


@dataclass(frozen=True)
class EnvState:
    normalized_gains: np.ndarray
    prev_action: np.ndarray
    step_index: int

    def vector(self) -> np.ndarray:
        return np.concatenate([self.normalized_gains, self.prev_action])


@dataclass(frozen=True)
class Transition:
    state: EnvState
    action: np.ndarray
    reward: float
    next_state: EnvState
    done: bool


def default_norm_constants(cfg: ScenarioConfig) -> tuple[float, float]:
    """Affine log10-gain normalization fixed from the analytic path-loss
    range of the scenario (not running statistics), so encodings are
    deterministic and replayable."""
    logs = np.log10(cfg.path_loss_matrix())
    mu = float((logs.max() + logs.min()) / 2.0)
    sigma = float(max((logs.max() - logs.min()) / 2.0, 1.0))
    return mu, sigma


def normalize_gains(
    ch: ChannelRealization, mu: float, sigma: float
) -> np.ndarray:
    """(log10(max(gain, floor)) - mu) / sigma, flattened AP-major."""
    g = np.maximum(ch.gains, GAIN_FLOOR)
    return ((np.log10(g) - mu) / sigma).ravel()


class JammingEnv:
    """Episodic environment; one instance is single-threaded and owns its
    random stream."""

    def __init__(
        self,
        cfg: ScenarioConfig,
        rng: np.random.Generator,
        episode_length: int = 100,
        reward_weight: float = 1.0,
        freeze_channel: bool = False,
        norm_mu: float | None = None,
        norm_sigma: float | None = None,
    ):
        if episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        self.cfg = cfg
        self.rng = rng
        self.episode_length = episode_length
        self.reward_weight = reward_weight
        self.freeze_channel = freeze_channel
        mu, sigma = default_norm_constants(cfg)
        self.norm_mu = mu if norm_mu is None else norm_mu
        self.norm_sigma = sigma if norm_sigma is None else norm_sigma
        self.clamp_count = 0
        # Frozen mode realizes the channel exactly once, up front.
        self.channel = realize_channel(cfg, rng) if freeze_channel else None
        self._state: EnvState | None = None

    @property
    def state_dim(self) -> int:
        return self.cfg.n_aps * self.cfg.n_receivers + self.cfg.n_aps

    @property
    def action_dim(self) -> int:
        return self.cfg.n_aps

    def _make_state(self, prev_action: np.ndarray, step_index: int) -> EnvState:
        return EnvState(
            normalized_gains=normalize_gains(
                self.channel, self.norm_mu, self.norm_sigma
            ),
            prev_action=np.asarray(prev_action, float),
            step_index=step_index,
        )

    def reset(self) -> EnvState:
        if not self.freeze_channel:
            self.channel = realize_channel(self.cfg, self.rng)
        self._state = self._make_state(np.zeros(self.cfg.n_aps), 0)
        return self._state

    def step(self, action) -> tuple[EnvState, float, bool, SecrecyMetrics]:
        """Apply a normalized action; reward is evaluated on the channel the
        agent observed, then fading is redrawn for the next state."""
        if self._state is None:
            raise RuntimeError("call reset() before step()")
        a = np.asarray(action, dtype=float)
        if a.shape != (self.cfg.n_aps,):
            raise ValueError(f"action shape {a.shape} != ({self.cfg.n_aps},)")
        if np.any(a < 0.0) or np.any(a > 1.0):
            self.clamp_count += 1
            a = np.clip(a, 0.0, 1.0)
        p = PowerAllocation(p=a * self.cfg.p_max)
        r, metrics = secrecy_reward(p, self.channel, self.cfg, self.reward_weight)
        if not self.freeze_channel:
            self.channel = realize_channel(self.cfg, self.rng)
        next_index = self._state.step_index + 1
        done = next_index >= self.episode_length
        self._state = self._make_state(a, next_index)
        return self._state, r, done, metrics
