"""Centralized schedule: direct solve over all EV profiles and the two-step
route through the sum-EV load plus a slot-to-EV allocation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
import numpy as np

from .errors import AllocationError, ConvergenceError, InfeasibleError, NonConvexError
from .model import StateTrace, temperatures
from .problem import (
    TOL_BOUND,
    TOL_ENERGY,
    TOL_TEMP,
    ChargingProfile,
    ConstraintReport,
    Scenario,
    check_convexity,
    check_feasibility,
    constraint_report,
    cost_and_gradient,
    total_cost,
    uniform_profile,
)

log = logging.getLogger(__name__)

FLOW_UNIT_KWH = 1e-12


@dataclass(frozen=True)
class SolveOptions:
    kkt_tol: float = 1e-7
    max_iters: int = 20_000
    temp_constraint: bool = True
    seed: int = 0
    barrier_start: float = 1.0
    barrier_factor: float = 0.2
    barrier_end: float = 1e-8

    def __post_init__(self):
        if self.kkt_tol <= 0.0:
            raise ValueError("kkt_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolveReport:
    profile: ChargingProfile
    cost: float
    trace: StateTrace
    constraints: ConstraintReport
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    method: str = ""
    extra: dict = field(default_factory=dict)


def build_report(profile: ChargingProfile, s: Scenario, method: str, **kw) -> SolveReport:
    cost, trace = total_cost(profile, s)
    return SolveReport(profile, cost, trace, constraint_report(profile, s, trace), method=method, **kw)


def project_capped(y: np.ndarray, energy_kwh: np.ndarray, cap: float, delta_h: float) -> np.ndarray:
    """Euclidean projection of each row of ``y`` onto {0 <= v <= cap, sum(v)*delta_h = E}.

    The projection is clip(y - tau, 0, cap); tau is located exactly among the
    2T breakpoints where a component enters or leaves the box.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    target = np.asarray(energy_kwh, dtype=float).reshape(-1) / delta_h
    n, T = y.shape
    out = np.empty_like(y)
    full = target >= T * cap
    empty = target <= 0.0
    out[full] = cap
    out[empty] = 0.0
    rows = np.flatnonzero(~(full | empty))
    if rows.size == 0:
        return out
    yr = y[rows]
    brk = np.sort(np.concatenate([yr, yr - cap], axis=1), axis=1)
    # supply at each breakpoint, non-increasing along the sorted axis
    supply = np.clip(yr[:, None, :] - brk[:, :, None], 0.0, cap).sum(axis=2)
    tgt = target[rows]
    k = np.sum(supply >= tgt[:, None], axis=1) - 1
    k = np.clip(k, 0, 2 * T - 2)
    idx = np.arange(rows.size)
    s_lo, s_hi = supply[idx, k], supply[idx, k + 1]
    b_lo, b_hi = brk[idx, k], brk[idx, k + 1]
    span = s_lo - s_hi
    frac = np.where(span > 0.0, (s_lo - tgt) / np.where(span > 0.0, span, 1.0), 0.0)
    tau = b_lo + frac * (b_hi - b_lo)
    v = np.clip(yr - tau[:, None], 0.0, cap)
    # recompute tau on the free set to remove interpolation round-off
    free = (v > 0.0) & (v < cap)
    n_free = free.sum(axis=1)
    n_cap = (v >= cap).sum(axis=1)
    ok = n_free > 0
    if np.any(ok):
        tau_ref = (np.where(free, yr, 0.0).sum(axis=1) - (tgt - cap * n_cap)) / np.maximum(n_free, 1)
        tau = np.where(ok, tau_ref, tau)
        v = np.clip(yr - tau[:, None], 0.0, cap)
    out[rows] = v
    return out


@dataclass
class _Result:
    x: np.ndarray
    value: float
    iterations: int
    residual: float
    converged: bool


def duality_gap(x: np.ndarray, grad: np.ndarray, energy_kwh: np.ndarray, cap: float,
                delta_h: float) -> float:
    """Frank-Wolfe gap max_z <grad, x - z> over the feasible rows.

    For a convex cost this bounds the distance of f(x) to the optimum from above.
    """
    if x.size == 0:
        return 0.0
    order = np.argsort(grad, axis=1)
    g_sorted = np.take_along_axis(grad, order, axis=1)
    units = np.asarray(energy_kwh, dtype=float).reshape(-1, 1) / delta_h
    filled = np.clip(units - cap * np.arange(x.shape[1])[None, :], 0.0, cap)
    best = np.sum(g_sorted * filled, axis=1)
    return float(np.sum(np.sum(grad * x, axis=1) - best))


def _minimize(fg, project, gap, x0, tol, max_iters) -> _Result:
    """Accelerated projected gradient with backtracking and adaptive restart.

    ``fg`` returns (value, gradient) with value = inf outside the domain.
    Stops once the duality gap at the current iterate drops below
    ``tol * (1 + |f|)``.
    """
    x = x0
    f_x, g_x = fg(x)
    if not np.isfinite(f_x):
        raise InfeasibleError("starting point lies outside the barrier domain")
    y, f_y, g_y = x, f_x, g_x
    L = 1e-3
    t = 1.0
    residual = gap(x, g_x)
    for it in range(1, max_iters + 1):
        if residual <= tol * (1.0 + abs(f_x)):
            return _Result(x, f_x, it - 1, residual, True)
        L *= 0.8
        while True:
            x_new = project(y - g_y / L)
            d = x_new - y
            f_new, g_new = fg(x_new)
            if np.isfinite(f_new) and f_new <= f_y + np.sum(g_y * d) + 0.5 * L * np.sum(d * d) + 1e-15 * abs(f_y):
                break
            L *= 2.0
            if L > 1e30:
                raise ConvergenceError("line search failed to find a decrease")
        if f_new <= f_x:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y_next = x_new + ((t - 1.0) / t_next) * (x_new - x)
            x, f_x, g_x, t = x_new, f_new, g_new, t_next
            f_y, g_y = fg(y_next)
            y = y_next
            if not np.isfinite(f_y):
                y, f_y, g_y, t = x, f_x, g_x, 1.0
            residual = gap(x, g_x)
        else:
            y, f_y, g_y, t = x, f_x, g_x, 1.0
    return _Result(x, f_x, max_iters, residual, residual <= tol * (1.0 + abs(f_x)))


def minimize_rows(s: Scenario, x0: np.ndarray, energies: np.ndarray, cap: float,
                  opts: SolveOptions, offset_kw: Optional[np.ndarray] = None,
                  enforce_temp: Optional[bool] = None, strict: bool = True,
                  sets=None) -> _Result:
    """Minimize the network cost over the rows of ``x`` whose sum, added to
    ``offset_kw``, is the sum-EV load. Each row keeps its own energy target and
    the common per-slot cap.

    Thermal limits are imposed with a log barrier only when the unconstrained
    minimizer breaks them. With ``strict`` an infeasible barrier start raises;
    otherwise the unconstrained minimizer is returned as is. ``sets`` swaps
    in another (project, gap) pair for the feasible set.
    """
    offset = np.zeros(s.T) if offset_kw is None else np.asarray(offset_kw, dtype=float)
    enforce = opts.temp_constraint if enforce_temp is None else enforce_temp
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))

    if sets is not None:
        project, gap = sets
    else:
        def project(z):
            return project_capped(z, energies, cap, s.delta_h)

        def gap(z, g):
            return duality_gap(z, g, energies, cap, s.delta_h)

    def make_fg(mu):
        def fg(z):
            value, grad = cost_and_gradient(offset + z.sum(axis=0), s, barrier=mu)
            return value, np.broadcast_to(grad, z.shape)
        return fg

    start = project(x0)
    res = _minimize(make_fg(0.0), project, gap, start, opts.kkt_tol, opts.max_iters)
    if not enforce:
        return res
    x_max = s.thermal.x_max
    temps_ok = _max_temp(s, offset + res.x.sum(axis=0)) <= x_max + TOL_TEMP
    if temps_ok:
        return res
    if _max_temp(s, offset + start.sum(axis=0)) >= x_max:
        if strict:
            raise InfeasibleError("no strictly feasible start for the hot-spot limit")
        return res
    x = start
    mu = opts.barrier_start
    total = res.iterations
    while mu >= opts.barrier_end:
        stage = _minimize(make_fg(mu), project, gap, x, opts.kkt_tol, opts.max_iters)
        x, total = stage.x, total + stage.iterations
        mu *= opts.barrier_factor
    value, _ = make_fg(0.0)(x)
    return _Result(x, value, total, stage.residual, stage.converged)


def _max_temp(s: Scenario, w_kw) -> float:
    return float(np.max(temperatures(s.per_unit(w_kw), s.ambient, s.thermal)))


def _require_solvable(s: Scenario, opts: SolveOptions = SolveOptions()):
    convex, margin = check_convexity(s)
    if not convex:
        raise NonConvexError(
            f"a*b1 + b2 = {margin:.6g} < 0: the cost is not guaranteed convex "
            "(convexity needs the thermal memory term to be non-negative)")
    ok, report = check_feasibility(s)
    if not opts.temp_constraint:
        ok = bool(np.all(report.energy_slack_kwh >= -TOL_ENERGY)) and report.bound_violation <= TOL_BOUND
    if not ok:
        raise InfeasibleError("scenario fails the sufficient feasibility test", report)


def _energy_active(profile: ChargingProfile, s: Scenario):
    slack = profile.energy_kwh - s.demands
    if np.any(np.abs(slack) > TOL_ENERGY):
        raise ConvergenceError(f"energy constraint not active at optimum (max slack {slack.max():.3g} kWh)")


def solve_centralized(s: Scenario, opts: SolveOptions = SolveOptions()) -> SolveReport:
    _require_solvable(s, opts)
    init = uniform_profile(s)
    if s.I == 0:
        return build_report(init, s, "central")
    res = minimize_rows(s, init.v, s.demands, s.v_max, opts)
    if not res.converged:
        raise ConvergenceError(f"centralized solve stalled at residual {res.residual:.3g} after {res.iterations} iterations")
    profile = ChargingProfile(res.x, s.delta_h)
    _energy_active(profile, s)
    return build_report(profile, s, "central", iterations=res.iterations, residual=res.residual)


def aggregate_increments(s: Scenario) -> np.ndarray:
    """Marginal capacities d_k (kW) of the set of allocatable sum-EV loads.

    A load w splits among the EVs iff its k largest entries never carry more
    energy than sum_i min(S_i, v_max*delta*k). That set is the permutahedron
    spanned by the non-increasing vector d.
    """
    k = np.arange(s.T)[:, None]
    step = s.v_max * s.delta_h
    d_kwh = np.clip(s.demands[None, :] - step * k, 0.0, step).sum(axis=1)
    return d_kwh / s.delta_h


def _pav_nonincreasing(r: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit (pool adjacent violators)."""
    sums, counts = [], []
    for value in r:
        sums.append(float(value))
        counts.append(1)
        while len(sums) > 1 and sums[-2] / counts[-2] < sums[-1] / counts[-1]:
            tail_sum, tail_count = sums.pop(), counts.pop()
            sums[-1] += tail_sum
            counts[-1] += tail_count
    return np.repeat(np.array(sums) / np.array(counts), counts)


def project_aggregate(y: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Euclidean projection of a single row onto the permutahedron of ``d``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    row = y[0]
    order = np.argsort(-row, kind="stable")
    ys = row[order]
    x = np.empty_like(row)
    x[order] = ys - _pav_nonincreasing(ys - d)
    return np.clip(x, 0.0, d[0])[None, :]


def aggregate_gap(x: np.ndarray, grad: np.ndarray, d: np.ndarray) -> float:
    # the linear minimizer puts the largest increment on the smallest gradient
    return float(np.sum(grad * x) - np.sum(np.sort(grad[0]) * d))


def solve_sum_load(s: Scenario, opts: SolveOptions = SolveOptions()) -> np.ndarray:
    """Unique optimal sum-EV load w* (kW per slot) among the loads that can be
    split over the fleet."""
    _require_solvable(s, opts)
    total = float(np.sum(s.demands))
    if s.I == 0 or total == 0.0:
        return np.zeros(s.T)
    d = aggregate_increments(s)
    start = project_aggregate(uniform_profile(s).sum_load, d)
    sets = (lambda z: project_aggregate(z, d), lambda z, g: aggregate_gap(z, g, d))
    res = minimize_rows(s, start, np.array([total]), s.I * s.v_max, opts, sets=sets)
    if not res.converged:
        raise ConvergenceError(f"sum-load solve stalled at residual {res.residual:.3g}")
    w = res.x[0]
    if abs(w.sum() * s.delta_h - total) > TOL_ENERGY:
        raise ConvergenceError("energy constraint not active at the sum-load optimum")
    return w


def allocate(w_kw: np.ndarray, s: Scenario) -> ChargingProfile:
    """Split a sum-EV load among the EVs, meeting each demand and the power cap."""
    w = np.asarray(w_kw, dtype=float)
    total = float(np.sum(s.demands))
    if abs(w.sum() * s.delta_h - total) > TOL_ENERGY:
        raise AllocationError(
            f"sum-EV load carries {w.sum() * s.delta_h:.9g} kWh, demands total {total:.9g} kWh",
            gap_kwh=total - w.sum() * s.delta_h)
    if s.I == 0 or total == 0.0:
        return ChargingProfile.zeros(s)
    share = s.demands / total
    v = share[:, None] * w[None, :]
    if np.all(v <= s.v_max + TOL_BOUND):
        return ChargingProfile(np.minimum(v, s.v_max), s.delta_h)
    log.debug("proportional split exceeds v_max, falling back to max-flow")
    return _allocate_max_flow(w, s)


def _allocate_max_flow(w: np.ndarray, s: Scenario) -> ChargingProfile:
    q = lambda kwh: int(round(kwh / FLOW_UNIT_KWH))  # noqa: E731
    g = nx.DiGraph()
    arc_cap = q(s.v_max * s.delta_h)
    for t in range(s.T):
        g.add_edge("src", ("slot", t), capacity=q(w[t] * s.delta_h))
        for i in range(s.I):
            g.add_edge(("slot", t), ("ev", i), capacity=arc_cap)
    for i in range(s.I):
        g.add_edge(("ev", i), "snk", capacity=q(s.demands[i]))
    value, flow = nx.maximum_flow(g, "src", "snk")
    need = sum(q(d) for d in s.demands)
    if value < need - s.T - s.I:
        gap = (need - value) * FLOW_UNIT_KWH
        raise AllocationError(f"max-flow delivers {gap:.9g} kWh less than the demands", gap_kwh=gap)
    v = np.zeros((s.I, s.T))
    for t in range(s.T):
        for (_, i), units in flow[("slot", t)].items():
            v[i, t] = units * FLOW_UNIT_KWH / s.delta_h
    return ChargingProfile(np.minimum(v, s.v_max), s.delta_h)


def two_step_solve(s: Scenario, opts: SolveOptions = SolveOptions()) -> SolveReport:
    w = solve_sum_load(s, opts)
    profile = allocate(w, s)
    report = build_report(profile, s, "two_step")
    report.extra["sum_load_kw"] = w
    return report
