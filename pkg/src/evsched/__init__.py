"""EV charging schedules that limit transformer ageing and network losses."""

from .model import StateTrace, ThermalParams, faa, lifetime_years, simulate_trace, step_temperature, unroll_state
from .problem import ChargingProfile, ConstraintReport, MemorylessCost, Scenario, total_cost

__all__ = [
    "ChargingProfile",
    "ConstraintReport",
    "MemorylessCost",
    "Scenario",
    "StateTrace",
    "ThermalParams",
    "faa",
    "lifetime_years",
    "simulate_trace",
    "step_temperature",
    "total_cost",
    "unroll_state",
]
