import itertools

import numpy as np
import pytest

from evsched.harness import default_scenario_path, load_scenario, synth_demand
from evsched.model import ThermalParams
from evsched.problem import MemorylessCost, Scenario


@pytest.fixture
def params():
    return ThermalParams()


@pytest.fixture(scope="session")
def shipped():
    return load_scenario(default_scenario_path())


def make_scenario(demands, nonev_kw, ambient=None, v_max=3.0, delta_h=0.5, nominal_kw=90.0,
                  memoryless=None, **thermal):
    nonev_kw = np.asarray(nonev_kw, dtype=float)
    ambient = np.full(nonev_kw.size, 20.0) if ambient is None else ambient
    return Scenario(delta_h=delta_h, demands=np.asarray(demands, dtype=float), v_max=v_max,
                    nominal_kw=nominal_kw, nonev_kw=nonev_kw, ambient=ambient,
                    thermal=ThermalParams(**thermal), memoryless=memoryless or MemorylessCost())


def sv_style(n_ev, seed=0, demand=24.0):
    """Evening-peak district of 30 households with ``n_ev`` identical EVs."""
    nonev, ambient = synth_demand("evening_peak", 30, seed=seed)
    return Scenario(0.5, np.full(n_ev, demand), 3.0, 90.0, nonev, ambient)


def random_small(rng, n_ev, T, fill=0.4):
    """Random instance with demands at most ``fill`` of the reachable energy."""
    nonev = rng.uniform(0.2, 1.1, size=T) * 90.0
    ambient = rng.uniform(0.0, 25.0, size=T)
    demands = rng.uniform(0.05, fill, size=n_ev) * 3.0 * 0.5 * T
    x0 = rng.uniform(40.0, 100.0)
    return make_scenario(demands, nonev, ambient, x0=x0, u0=rng.uniform(0.3, 1.0))


def oracle_cost(v, s):
    """Network cost composed by hand from the recursion (no library helpers)."""
    p = s.thermal
    u = (s.nonev_kw + np.asarray(v).sum(axis=0)) / s.nominal_kw
    x, u_prev, total = p.x0, p.u0, 0.0
    beta = 0.0 if s.memoryless.fold_beta else p.beta
    for t in range(s.T):
        x = p.a * x + p.b1 * u[t] ** 2 + p.b2 * u_prev ** 2 + p.amb_gain * (p.amb_offset + s.ambient[t])
        u_prev = u[t]
        total += np.exp(p.alpha * x + beta) + s.memoryless.weight * u[t] ** 2
    return total


def grid_best(s):
    """Cheapest profile on the {0, v_max/2, v_max} grid that meets every demand."""
    levels = (0.0, s.v_max / 2, s.v_max)
    best = np.inf
    for combo in itertools.product(levels, repeat=s.I * s.T):
        v = np.array(combo).reshape(s.I, s.T)
        if np.all(v.sum(axis=1) * s.delta_h >= s.demands):
            best = min(best, oracle_cost(v, s))
    return best


def random_feasible(rng, s, n):
    out = []
    while len(out) < n:
        v = rng.uniform(0, s.v_max, size=(s.I, s.T))
        if np.all(v.sum(axis=1) * s.delta_h >= s.demands):
            out.append(v)
    return out


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""
    def record(n, ok, elapsed, budget, detail):
        status = "PASS" if ok else "FAIL"
        _ACCEPTANCE[n] = f"criterion {n:2d}: {status}  {elapsed:7.2f}s of {budget:g}s  {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
