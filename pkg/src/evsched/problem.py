"""Charging scenario, composite network cost and constraint checks."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError
from .model import StateTrace, ThermalParams, faa, simulate_trace, temperatures

TOL_ENERGY = 1e-6  # kWh
TOL_BOUND = 1e-9  # kW
TOL_TEMP = 1e-6  # C


@dataclass(frozen=True)
class MemorylessCost:
    """Memoryless part f of the cost, f(u) = coefficient * u**2 on per-unit load.

    ``fold_beta`` drops the ageing intercept from the exponential term; the
    coefficient is then understood to already carry the exp(-beta) scaling.
    """

    kind: str = "zero"
    coefficient: float = 0.0
    fold_beta: bool = False

    def __post_init__(self):
        if self.kind not in ("zero", "quadratic"):
            raise ValueError(f"unknown memoryless cost kind {self.kind!r}")
        if self.coefficient < 0.0:
            raise ValueError("memoryless cost coefficient must be >= 0")

    @property
    def weight(self) -> float:
        return self.coefficient if self.kind == "quadratic" else 0.0

    def __call__(self, u):
        return self.weight * np.square(u)

    def derivative(self, u):
        return 2.0 * self.weight * np.asarray(u, dtype=float)


def _frozen_array(values, name, ndim=1):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Scenario:
    delta_h: float
    demands: np.ndarray
    v_max: float
    nominal_kw: float
    nonev_kw: np.ndarray
    ambient: np.ndarray
    thermal: ThermalParams = field(default_factory=ThermalParams)
    memoryless: MemorylessCost = field(default_factory=MemorylessCost)
    joule_k: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "demands", _frozen_array(self.demands, "demands"))
        object.__setattr__(self, "nonev_kw", _frozen_array(self.nonev_kw, "nonev_kw"))
        object.__setattr__(self, "ambient", _frozen_array(self.ambient, "ambient"))
        if self.nonev_kw.size < 1:
            raise ValueError("horizon must contain at least one slot")
        if self.ambient.shape != self.nonev_kw.shape:
            raise DimensionError(
                f"ambient has {self.ambient.size} slots, non-EV demand has {self.nonev_kw.size}")
        if self.delta_h <= 0.0:
            raise ValueError("delta_h must be > 0")
        if self.v_max <= 0.0:
            raise ValueError("v_max must be > 0")
        if self.nominal_kw <= 0.0:
            raise ValueError("nominal_kw must be > 0")
        if np.any(self.demands < 0.0):
            raise ValueError("energy demands must be >= 0")
        if np.any(self.nonev_kw < 0.0):
            raise ValueError("non-EV demand must be >= 0")
        if self.joule_k < 0.0:
            raise ValueError("joule_k must be >= 0")

    @property
    def T(self) -> int:
        return int(self.nonev_kw.size)

    @property
    def I(self) -> int:  # noqa: E743
        return int(self.demands.size)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_fleet(self, n_ev: int, demand_kwh: float) -> "Scenario":
        return self.replace(demands=np.full(n_ev, float(demand_kwh)))

    def per_unit(self, w_kw) -> np.ndarray:
        """Per-unit total transformer load given the sum-EV load in kW."""
        return (self.nonev_kw + np.asarray(w_kw, dtype=float)) / self.nominal_kw

    def joule_kwh(self, u_pu) -> np.ndarray:
        """Joule losses per slot in kWh for per-unit loads."""
        return self.joule_k * np.square(u_pu) * self.nominal_kw * self.delta_h


@dataclass(frozen=True)
class ChargingProfile:
    v: np.ndarray
    delta_h: float

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim != 2:
            raise DimensionError(f"profile must be I x T, got shape {v.shape}")
        if np.any(v < -TOL_BOUND):
            raise ValueError(f"negative charging power {v.min()} kW")
        v = np.maximum(v, 0.0)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, s: Scenario) -> "ChargingProfile":
        return cls(np.zeros((s.I, s.T)), s.delta_h)

    @property
    def sum_load(self) -> np.ndarray:
        return self.v.sum(axis=0)

    @property
    def energy_kwh(self) -> np.ndarray:
        return self.v.sum(axis=1) * self.delta_h

    def check_shape(self, s: Scenario):
        if self.v.shape != (s.I, s.T):
            raise DimensionError(f"profile shape {self.v.shape} does not match scenario ({s.I}, {s.T})")
        if self.delta_h != s.delta_h:
            raise DimensionError(f"profile slot length {self.delta_h} h != scenario {s.delta_h} h")


@dataclass(frozen=True)
class ConstraintReport:
    energy_slack_kwh: np.ndarray
    bound_violation: float
    temp_violation: float
    feasible: bool

    def summary(self) -> dict:
        return {
            "feasible": bool(self.feasible),
            "min_energy_slack_kwh": float(self.energy_slack_kwh.min()) if self.energy_slack_kwh.size else 0.0,
            "bound_violation_kw": float(self.bound_violation),
            "temp_violation_c": float(self.temp_violation),
        }


def total_cost(v: ChargingProfile, s: Scenario) -> tuple[float, StateTrace]:
    v.check_shape(s)
    u = s.per_unit(v.sum_load)
    trace = simulate_trace(u, s.ambient, s.thermal, joule=s.joule_kwh)
    return cost_from_loads(u, trace.temps, s), trace


def cost_from_loads(u: np.ndarray, temps: np.ndarray, s: Scenario) -> float:
    ageing = faa(temps, s.thermal, fold_beta=s.memoryless.fold_beta)
    return float(np.sum(ageing) + np.sum(s.memoryless(u)))


def sum_load_cost(w_kw: np.ndarray, s: Scenario) -> float:
    u = s.per_unit(w_kw)
    return cost_from_loads(u, temperatures(u, s.ambient, s.thermal), s)


def cost_and_gradient(w_kw: np.ndarray, s: Scenario, barrier: float = 0.0,
                      x_max: Optional[float] = None) -> tuple[float, np.ndarray]:
    """Cost and its gradient with respect to the sum-EV load (per kW).

    A positive ``barrier`` adds -barrier * sum(log(x_max - x_t)); outside the
    barrier domain the value is +inf and the gradient is undefined (NaN).
    """
    p = s.thermal
    u = s.per_unit(w_kw)
    x = temperatures(u, s.ambient, p)
    beta = 0.0 if s.memoryless.fold_beta else p.beta
    ageing = np.exp(p.alpha * x + beta)
    value = float(np.sum(ageing) + np.sum(s.memoryless(u)))
    direct = p.alpha * ageing
    if barrier > 0.0:
        limit = p.x_max if x_max is None else x_max
        gap = limit - x
        if np.any(gap <= 0.0):
            return np.inf, np.full_like(u, np.nan)
        value -= barrier * float(np.sum(np.log(gap)))
        direct = direct + barrier / gap
    # adjoint of the hot-spot recursion: lam_t = dC/dx_t
    lam = np.empty(s.T + 1)
    lam[s.T] = 0.0
    for t in range(s.T - 1, -1, -1):
        lam[t] = direct[t] + p.a * lam[t + 1]
    d_usq = p.b1 * lam[:-1] + p.b2 * lam[1:]
    grad_u = 2.0 * u * d_usq + s.memoryless.derivative(u)
    return value, grad_u / s.nominal_kw


def check_convexity(s_or_params) -> tuple[bool, float]:
    """Sufficient convexity condition a*b1 + b2 >= 0 and its margin."""
    p = s_or_params.thermal if isinstance(s_or_params, Scenario) else s_or_params
    margin = p.a * p.b1 + p.b2
    return margin >= 0.0, margin


def uniform_profile(s: Scenario) -> ChargingProfile:
    rate = s.demands / (s.T * s.delta_h)
    v = np.repeat(np.minimum(rate, s.v_max)[:, None], s.T, axis=1)
    return ChargingProfile(v, s.delta_h)


def constraint_report(v: ChargingProfile, s: Scenario, trace: Optional[StateTrace] = None,
                      tol_e: float = TOL_ENERGY, tol_v: float = TOL_BOUND,
                      tol_x: float = TOL_TEMP) -> ConstraintReport:
    v.check_shape(s)
    slack = v.energy_kwh - s.demands
    if v.v.size:
        bound = float(max(np.max(v.v - s.v_max), np.max(-v.v), 0.0))
    else:
        bound = 0.0
    if trace is None:
        temps = temperatures(s.per_unit(v.sum_load), s.ambient, s.thermal)
    else:
        temps = trace.temps
    temp_violation = float(np.max(temps - s.thermal.x_max))
    feasible = bool(np.all(slack >= -tol_e) and bound <= tol_v and temp_violation <= tol_x)
    return ConstraintReport(slack, bound, temp_violation, feasible)


def check_feasibility(s: Scenario, tol_e: float = TOL_ENERGY) -> tuple[bool, ConstraintReport]:
    """Sufficient feasibility test: every demand fits the horizon at v_max and
    the uniform spread keeps the hot spot under x_max."""
    energy_ok = bool(np.all(s.demands <= s.v_max * s.delta_h * s.T + tol_e))
    report = constraint_report(uniform_profile(s), s, tol_e=tol_e)
    return energy_ok and report.feasible, report


def support_sets(v: ChargingProfile, eps: float) -> list[frozenset]:
    """Active slots (0-based) of each EV, i.e. those with power above ``eps``."""
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    return [frozenset(np.flatnonzero(row > eps).tolist()) for row in v.v]
