from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..model import lifetime_years
from ..problem import ChargingProfile, Scenario, total_cost

SHORTFALL_TOL = 1e-9  # kWh


@dataclass(frozen=True)
class PolicyMetrics:
    lifetime_years: float
    peak_temp_c: float
    total_joule_kwh: float
    total_cost: float
    shutdown_violated: bool
    energy_shortfall_kwh: float

    def rounded(self) -> "PolicyMetrics":
        """Values at CSV precision: years and C to 2 decimals, kWh to 3."""
        return PolicyMetrics(
            round(self.lifetime_years, 2),
            round(self.peak_temp_c, 2),
            round(self.total_joule_kwh, 3),
            self.total_cost,
            self.shutdown_violated,
            round(self.energy_shortfall_kwh, 3),
        )


def evaluate(v: ChargingProfile, s: Scenario) -> PolicyMetrics:
    """Score a profile against the scenario's (true) non-EV demand."""
    cost, trace = total_cost(v, s)
    shortfall = np.maximum(s.demands - v.energy_kwh, 0.0)
    shortfall = float(np.sum(shortfall[shortfall > SHORTFALL_TOL]))
    return PolicyMetrics(
        lifetime_years=lifetime_years(trace.faa),
        peak_temp_c=trace.peak_temp,
        total_joule_kwh=float(np.sum(trace.joule)),
        total_cost=cost,
        shutdown_violated=bool(np.any(trace.temps > s.thermal.x_max)),
        energy_shortfall_kwh=shortfall,
    )


def relative_loss(reference: float, value: float) -> float:
    if reference <= 0.0 or not math.isfinite(reference):
        raise ValueError("reference lifetime must be positive and finite")
    return 1.0 - value / reference
