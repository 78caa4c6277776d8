"""Propagation models: log-distance path loss, Rayleigh block fading, SINR,
and Shannon capacity.

All gains are linear power gains (dimensionless), all powers in watts.
Receivers are indexed users-first, then eavesdroppers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Point = tuple[float, float]


@dataclass(frozen=True)
class ScenarioConfig:
    """Static description of the jamming scenario.

    Each user is served by exactly one AP and each AP serves exactly one
    user (user_to_ap is a permutation); non-serving APs act as friendly
    jammers.
    """

    ap_positions: tuple[Point, ...] = ((0.0, 0.0), (60.0, 0.0), (0.0, 60.0))
    user_positions: tuple[Point, ...] = ((10.0, 0.0), (50.0, 0.0), (0.0, 50.0))
    eve_positions: tuple[Point, ...] = ((20.0, 20.0), (40.0, 10.0))
    user_to_ap: tuple[int, ...] = (0, 1, 2)
    p_max: float = 1.0
    noise_power: float = 1e-7
    path_loss_exponent: float = 3.0
    ref_distance: float = 1.0
    ref_gain: float = 1e-3

    def __post_init__(self) -> None:
        if self.p_max <= 0:
            raise ValueError("p_max must be > 0")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be > 0")
        if self.path_loss_exponent < 2:
            raise ValueError("path_loss_exponent must be >= 2")
        if self.ref_distance <= 0:
            raise ValueError("ref_distance must be > 0")
        if self.ref_gain <= 0:
            raise ValueError("ref_gain must be > 0")
        if len(self.user_positions) != len(self.user_to_ap):
            raise ValueError("user_to_ap must assign every user")
        if sorted(self.user_to_ap) != list(range(self.n_aps)):
            raise ValueError("user_to_ap must be a permutation of AP indices")
        d = self.distance_matrix()
        if np.any(d < self.ref_distance):
            raise ValueError(
                "all AP-receiver distances must be >= ref_distance"
            )

    @property
    def n_aps(self) -> int:
        return len(self.ap_positions)

    @property
    def n_users(self) -> int:
        return len(self.user_positions)

    @property
    def n_eves(self) -> int:
        return len(self.eve_positions)

    @property
    def n_receivers(self) -> int:
        return self.n_users + self.n_eves

    def serving_ap(self, user: int) -> int:
        return self.user_to_ap[user]

    def served_user(self, ap: int) -> int:
        return self.user_to_ap.index(ap)

    def receiver_positions(self) -> np.ndarray:
        """Positions of all receivers, users first then eavesdroppers."""
        return np.array(self.user_positions + self.eve_positions, dtype=float)

    def distance_matrix(self) -> np.ndarray:
        """(n_aps, n_receivers) matrix of AP-receiver distances in meters."""
        aps = np.array(self.ap_positions, dtype=float)
        rx = self.receiver_positions()
        diff = aps[:, None, :] - rx[None, :, :]
        return np.sqrt(np.sum(diff**2, axis=-1))

    def path_loss_matrix(self) -> np.ndarray:
        """(n_aps, n_receivers) matrix of pure large-scale gains."""
        return path_loss(self.distance_matrix(), self)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-step linear power gains, gains[ap, receiver]."""

    gains: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gains, dtype=float)
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValueError("channel gains must be finite and >= 0")
        object.__setattr__(self, "gains", g)


def path_loss(d, cfg: ScenarioConfig):
    """Log-distance large-scale gain g0 * (d/d0)^(-alpha).

    Accepts scalars or arrays; raises for any distance below the
    reference distance (invalid geometry).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < cfg.ref_distance):
        raise ValueError(f"distance below ref_distance={cfg.ref_distance}")
    g = cfg.ref_gain * (d / cfg.ref_distance) ** (-cfg.path_loss_exponent)
    return float(g) if g.ndim == 0 else g


def sample_small_scale(rng: np.random.Generator, size=None):
    """Rayleigh-fading power gain |h|^2: unit-mean exponential."""
    return rng.exponential(1.0, size=size)


def realize_channel(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    small_scale: np.ndarray | None = None,
) -> ChannelRealization:
    """Draw one block-fading realization: path loss times i.i.d. |h|^2.

    `small_scale` overrides the fading draw (test hook); pass an all-ones
    matrix to get the pure path-loss channel.
    """
    pl = cfg.path_loss_matrix()
    if small_scale is None:
        small_scale = sample_small_scale(rng, size=pl.shape)
    return ChannelRealization(gains=pl * np.asarray(small_scale, dtype=float))


def sinr(
    receiver: int,
    serving_ap: int,
    p,
    ch: ChannelRealization,
    cfg: ScenarioConfig,
) -> float:
    """SINR at `receiver` for the signal of `serving_ap`.

    Every other AP counts as interference (friendly jamming is never
    cancelled, neither at users nor at eavesdroppers).
    """
    p = np.asarray(p, dtype=float)
    g = ch.gains[:, receiver]
    signal = p[serving_ap] * g[serving_ap]
    interference = float(np.sum(p * g) - signal)
    return signal / (interference + cfg.noise_power)


def shannon_capacity(s: float) -> float:
    """log2(1 + SINR), bits/s/Hz."""
    if s < 0:
        raise ValueError("SINR must be >= 0")
    return float(np.log2(1.0 + s))
