"""Security metrics: secrecy rate, secure energy efficiency, and the scalar
optimization reward (sum of secrecy rates plus weighted sum of secure EE).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, ScenarioConfig, shannon_capacity, sinr

# Powers at or below this are treated as "off" for the EE division.
ZERO_POWER_EPS = 1e-9


@dataclass(frozen=True)
class PowerAllocation:
    """Per-AP transmit powers in watts."""

    p: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    def validate(self, cfg: ScenarioConfig) -> None:
        if self.p.shape != (cfg.n_aps,):
            raise ValueError(f"expected {cfg.n_aps} powers, got {self.p.shape}")
        if np.any(self.p < 0) or np.any(self.p > cfg.p_max):
            raise ValueError("powers must lie in [0, p_max]")


@dataclass(frozen=True)
class SecrecyMetrics:
    """Full metric breakdown behind one reward evaluation."""

    user_capacity: np.ndarray        # per user, bits/s/Hz
    eve_capacity: np.ndarray         # (n_eves, n_users), bits/s/Hz
    secrecy_rate: np.ndarray         # per user, bits/s/Hz
    secure_ee: np.ndarray            # per AP, bits/s/Hz per watt
    reward: float

    @property
    def sr_sum(self) -> float:
        return float(np.sum(self.secrecy_rate))

    @property
    def see_sum(self) -> float:
        return float(np.sum(self.secure_ee))


def secrecy_rate(
    user: int,
    p: PowerAllocation,
    ch: ChannelRealization,
    cfg: ScenarioConfig,
) -> float:
    """max(0, user capacity - best eavesdropper capacity) for one user.

    Every eavesdropper is assumed to wiretap every link, so the penalty is
    the worst case over all eavesdroppers.
    """
    ap = cfg.serving_ap(user)
    c_user = shannon_capacity(sinr(user, ap, p.p, ch, cfg))
    c_eve = 0.0
    for e in range(cfg.n_eves):
        rx = cfg.n_users + e
        c_eve = max(c_eve, shannon_capacity(sinr(rx, ap, p.p, ch, cfg)))
    return max(0.0, c_user - c_eve)


def secure_ee(
    ap: int,
    p: PowerAllocation,
    ch: ChannelRealization,
    cfg: ScenarioConfig,
) -> float:
    """Secrecy rate of the served user per watt of the AP's transmit power.

    Defined as 0 when the AP is effectively off (removes the 0/0 case,
    since an off AP also delivers zero secrecy rate).
    """
    if p.p[ap] <= ZERO_POWER_EPS:
        return 0.0
    return secrecy_rate(cfg.served_user(ap), p, ch, cfg) / float(p.p[ap])


def reward(
    p: PowerAllocation,
    ch: ChannelRealization,
    cfg: ScenarioConfig,
    weight: float = 1.0,
) -> tuple[float, SecrecyMetrics]:
    """Scalar objective: sum of secrecy rates + weight * sum of secure EE.

    Returns the scalar together with the full metric breakdown.
    """
    n_u, n_e = cfg.n_users, cfg.n_eves
    user_cap = np.zeros(n_u)
    eve_cap = np.zeros((n_e, n_u))
    sr = np.zeros(n_u)
    for u in range(n_u):
        ap = cfg.serving_ap(u)
        user_cap[u] = shannon_capacity(sinr(u, ap, p.p, ch, cfg))
        for e in range(n_e):
            eve_cap[e, u] = shannon_capacity(sinr(n_u + e, ap, p.p, ch, cfg))
        worst = float(np.max(eve_cap[:, u])) if n_e else 0.0
        sr[u] = max(0.0, user_cap[u] - worst)
    see = np.zeros(cfg.n_aps)
    for a in range(cfg.n_aps):
        if p.p[a] > ZERO_POWER_EPS:
            see[a] = sr[cfg.served_user(a)] / float(p.p[a])
    total = float(np.sum(sr) + weight * np.sum(see))
    return total, SecrecyMetrics(
        user_capacity=user_cap,
        eve_capacity=eve_cap,
        secrecy_rate=sr,
        secure_ee=see,
        reward=total,
    )
