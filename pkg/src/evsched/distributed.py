"""Sequential best-response dynamics over the EVs.

Each EV in turn replaces its own profile by a best response to the load of
the others, with one of three response rules:

* ``ddc``: exact minimizer of the network cost over the EV's whole profile;
* ``ivfa``: valley filling, a clipped threshold on the others' load;
* ``rect``: best start slot of a constant-power window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .central import SolveOptions, SolveReport, build_report, minimize_rows
from .errors import InfeasibleError
from .problem import ChargingProfile, Scenario, check_convexity, sum_load_cost, uniform_profile

RULES = ("ddc", "ivfa", "rect")


@dataclass(frozen=True)
class BrdConfig:
    rule: str = "ddc"
    max_rounds: int = 50
    rel_tol: float = 1e-6
    order: Optional[Sequence[int]] = None
    rect_power: Optional[float] = None
    seed: int = 0
    trim_rect: bool = False
    random_ties: bool = False
    store_profiles: bool = False
    solve: SolveOptions = SolveOptions()

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown best-response rule {self.rule!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.rel_tol <= 0.0:
            raise ValueError("rel_tol must be > 0")
        if self.rect_power is not None and self.rect_power <= 0.0:
            raise ValueError("rect_power must be > 0")


@dataclass
class BrdTrace:
    cost_per_round: list = field(default_factory=list)
    response_costs: list = field(default_factory=list)
    energy_errors: list = field(default_factory=list)
    rounds_to_converge: int = 0
    converged: bool = False
    per_round_profiles: list = field(default_factory=list)

    def max_ascent(self, skip_first_round: bool = False) -> float:
        """Largest cost increase caused by a single response."""
        steps = self.response_costs
        if skip_first_round:
            steps = [r for r in steps if r[0] > 1]
        return max((after - before for _, _, before, after in steps), default=0.0)


class BestResponseError(RuntimeError):
    def __init__(self, ev, cause):
        super().__init__(f"best response of EV {ev} failed: {cause}")
        self.ev = ev


def _check_reachable(s: Scenario, i: int, power: float):
    if s.demands[i] > power * s.delta_h * s.T + 1e-9:
        raise InfeasibleError(
            f"EV {i} needs {s.demands[i]} kWh but at most {power * s.delta_h * s.T} kWh fit the horizon")


def ddc_best_response(i: int, others_kw: np.ndarray, s: Scenario,
                      opts: SolveOptions = SolveOptions(),
                      current: Optional[np.ndarray] = None) -> np.ndarray:
    """Cost-minimizing profile of EV ``i`` against the frozen EV load ``others_kw``."""
    convex, margin = check_convexity(s)
    if not convex:
        raise InfeasibleError(f"best response needs a*b1 + b2 >= 0, got {margin:.6g}")
    _check_reachable(s, i, s.v_max)
    demand = s.demands[i]
    if demand == 0.0:
        return np.zeros(s.T)
    start = np.full(s.T, demand / (s.T * s.delta_h)) if current is None else current
    res = minimize_rows(s, start, np.array([demand]), s.v_max, opts,
                        offset_kw=others_kw, strict=False)
    return res.x[0]


def ivfa_best_response(i: int, others_kw: np.ndarray, s: Scenario,
                       iterations: int = 200) -> np.ndarray:
    """Valley-filling profile: power clip(level - base_t, 0, v_max) with the
    level found by bisection so that the delivered energy is the demand."""
    _check_reachable(s, i, s.v_max)
    demand = s.demands[i]
    if demand == 0.0:
        return np.zeros(s.T)
    base = s.nonev_kw + np.asarray(others_kw, dtype=float)
    target = demand / s.delta_h
    lo = float(base.min())
    hi = float(base.max()) + s.v_max + target / s.T

    def supply(level):
        return np.clip(level - base, 0.0, s.v_max)

    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if supply(mid).sum() < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    v = supply(hi)
    # solve the level exactly on the slots left strictly inside the box
    free = (v > 0.0) & (v < s.v_max)
    if free.any():
        n_cap = np.count_nonzero(v >= s.v_max)
        level = (target - s.v_max * n_cap + base[free].sum()) / np.count_nonzero(free)
        exact = supply(level)
        if np.array_equal(exact > 0.0, v > 0.0) and np.array_equal(exact >= s.v_max, v >= s.v_max):
            v = exact
    return v


def window_length(demand_kwh: float, power_kw: float, delta_h: float) -> int:
    if demand_kwh <= 0.0:
        return 0
    return int(math.ceil(demand_kwh / (power_kw * delta_h) - 1e-12))


def rect_window(T: int, start: int, length: int, power: float,
                demand_kwh: Optional[float] = None, delta_h: float = 1.0) -> np.ndarray:
    """Constant-power window of ``length`` slots starting at 0-based ``start``.

    With ``demand_kwh`` the last slot is trimmed so the window delivers
    exactly that energy.
    """
    v = np.zeros(T)
    v[start:start + length] = power
    if demand_kwh is not None and length:
        v[start + length - 1] = demand_kwh / delta_h - power * (length - 1)
    return v


def rect_best_response(i: int, others_kw: np.ndarray, s: Scenario, power: Optional[float] = None,
                       trim: bool = False, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Cheapest rectangular window for EV ``i`` by exhaustive search over start slots.

    Ties go to the earliest start unless ``rng`` is given, in which case one
    of the tied windows is drawn at random.
    """
    power = s.v_max if power is None else power
    if power > s.v_max:
        raise ValueError(f"window power {power} kW exceeds v_max {s.v_max} kW")
    demand = s.demands[i]
    length = window_length(demand, power, s.delta_h)
    if length == 0:
        return np.zeros(s.T)
    if length > s.T:
        raise InfeasibleError(f"EV {i} needs {length} slots at {power} kW, horizon has {s.T}")
    others = np.asarray(others_kw, dtype=float)
    energy = demand if trim else None
    windows = [rect_window(s.T, k, length, power, energy, s.delta_h) for k in range(s.T - length + 1)]
    costs = np.array([sum_load_cost(others + w, s) for w in windows])
    best = int(np.argmin(costs))
    if rng is not None:
        tied = np.flatnonzero(costs <= costs[best] * (1.0 + 1e-15))
        best = int(rng.choice(tied))
    return windows[best]


def brd_run(s: Scenario, cfg: BrdConfig = BrdConfig(),
            init: Optional[ChargingProfile] = None) -> tuple[SolveReport, BrdTrace]:
    """Round-robin best-response dynamics.

    Rounds stop when a full round leaves the profile unchanged or moves the
    cost by less than ``rel_tol`` relatively; rectangular windows stop only on
    an unchanged round. The ``rect`` rule ignores ``init`` and starts with
    every EV unscheduled.
    """
    order = list(range(s.I)) if cfg.order is None else list(cfg.order)
    if sorted(order) != list(range(s.I)):
        raise ValueError("order must be a permutation of the EV indices")
    rng = np.random.default_rng(cfg.seed)
    if cfg.rule == "rect":
        v = np.zeros((s.I, s.T))
    else:
        v = np.array((uniform_profile(s) if init is None else init).v, dtype=float)
        if v.shape != (s.I, s.T):
            raise ValueError(f"initial profile shape {v.shape} does not match ({s.I}, {s.T})")
    cost = sum_load_cost(v.sum(axis=0), s)
    trace = BrdTrace(cost_per_round=[cost])
    if cfg.store_profiles:
        trace.per_round_profiles.append(v.copy())

    for n in range(1, cfg.max_rounds + 1):
        changed = False
        start_cost = cost
        for i in order:
            others = v.sum(axis=0) - v[i]
            try:
                row = _respond(cfg, i, others, s, v[i], rng)
            except Exception as exc:  # noqa: BLE001
                raise BestResponseError(i, exc) from exc
            new_cost = sum_load_cost(others + row, s)
            if cfg.rule == "ddc" and new_cost > cost:
                # numerical noise in the inner solve: keep the incumbent
                row, new_cost = v[i], cost
            trace.response_costs.append((n, i, cost, new_cost))
            trace.energy_errors.append(abs(row.sum() * s.delta_h - s.demands[i]))
            if not np.array_equal(row, v[i]):
                changed = True
                v[i] = row
            cost = new_cost
        trace.cost_per_round.append(cost)
        if cfg.store_profiles:
            trace.per_round_profiles.append(v.copy())
        small = abs(start_cost - cost) <= cfg.rel_tol * abs(start_cost)
        if not changed or (cfg.rule != "rect" and small):
            trace.rounds_to_converge = n
            trace.converged = True
            break
    else:
        trace.rounds_to_converge = cfg.max_rounds

    profile = ChargingProfile(v, s.delta_h)
    report = build_report(profile, s, cfg.rule, iterations=trace.rounds_to_converge,
                          converged=trace.converged)
    report.extra["brd"] = trace
    return report, trace


def _respond(cfg: BrdConfig, i, others, s, current, rng):
    if cfg.rule == "ddc":
        return ddc_best_response(i, others, s, cfg.solve, current=current)
    if cfg.rule == "ivfa":
        return ivfa_best_response(i, others, s)
    return rect_best_response(i, others, s, cfg.rect_power, trim=cfg.trim_rect,
                              rng=rng if cfg.random_ties else None)
