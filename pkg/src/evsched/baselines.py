"""Reference policies: plug-and-charge with Poisson arrivals, uniform spread."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import ChargingProfile, Scenario, uniform_profile


@dataclass(frozen=True)
class PacConfig:
    arrival_mean_slots: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.arrival_mean_slots <= 0.0:
            raise ValueError("arrival_mean_slots must be > 0")


def pac_arrivals(s: Scenario, cfg: PacConfig = PacConfig()) -> np.ndarray:
    """1-based plug-in slots, 1 + Poisson(mean) clamped to the horizon."""
    rng = np.random.default_rng(cfg.seed)
    draws = rng.poisson(cfg.arrival_mean_slots, size=s.I)
    return np.minimum(1 + draws, s.T)


def charge_from(T: int, arrival: int, demand_kwh: float, v_max: float, delta_h: float) -> np.ndarray:
    """Full power from the 1-based ``arrival`` slot until the demand is met."""
    row = np.zeros(T)
    remaining = demand_kwh
    for t in range(arrival - 1, T):
        if remaining <= 0.0:
            break
        energy = min(v_max * delta_h, remaining)
        row[t] = energy / delta_h
        remaining -= energy
    return row


def pac_policy(s: Scenario, cfg: PacConfig = PacConfig()) -> ChargingProfile:
    """Plug-and-charge: every EV charges at v_max from its arrival.

    Demand that does not fit before the end of the horizon is simply not
    delivered; the shortfall shows up in the policy metrics.
    """
    arrivals = pac_arrivals(s, cfg)
    v = np.array([charge_from(s.T, int(a), d, s.v_max, s.delta_h)
                  for a, d in zip(arrivals, s.demands)]).reshape(s.I, s.T)
    return ChargingProfile(v, s.delta_h)


def uniform_policy(s: Scenario) -> ChargingProfile:
    """Spread each demand evenly over the horizon (clipped at v_max)."""
    return uniform_profile(s)
