import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid_best, make_scenario, oracle_cost, random_feasible, random_small, sv_style
from evsched.central import (
    SolveOptions,
    aggregate_increments,
    allocate,
    duality_gap,
    project_aggregate,
    project_capped,
    solve_centralized,
    solve_sum_load,
    two_step_solve,
)
from evsched.errors import AllocationError, InfeasibleError, NonConvexError
from evsched.problem import (
    TOL_ENERGY,
    ChargingProfile,
    check_feasibility,
    constraint_report,
    support_sets,
    total_cost,
    uniform_profile,
)


def bisect_root(fn, lo, hi, iters=200):
    """Root of an increasing function on [lo, hi] (clamped to the ends)."""
    if fn(lo) >= 0:
        return lo
    if fn(hi) <= 0:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# projection


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_projection_is_feasible_and_nearest(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 12))
    cap = rng.uniform(0.5, 4.0)
    y = rng.normal(0.0, 3.0, size=(3, T))
    energy = rng.uniform(0.0, cap * T, size=3) * 0.5
    v = project_capped(y, energy, cap, 0.5)
    assert np.all(v >= 0) and np.all(v <= cap)
    np.testing.assert_allclose(v.sum(axis=1) * 0.5, energy, atol=1e-12)
    # nearest point: no feasible exchange between two slots shortens the distance
    for r in range(3):
        for z in range(50):
            cand = project_capped(v[r] + rng.normal(0, 0.3, size=T), energy[r:r + 1], cap, 0.5)[0]
            assert np.sum((cand - y[r]) ** 2) >= np.sum((v[r] - y[r]) ** 2) - 1e-10


def test_projection_edges():
    y = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(project_capped(y, [0.0], 2.0, 1.0), [[0, 0, 0]])
    np.testing.assert_array_equal(project_capped(y, [6.0], 2.0, 1.0), [[2, 2, 2]])


def test_duality_gap_zero_at_lp_vertex():
    g = np.array([[3.0, 1.0, 2.0]])
    x = np.array([[0.0, 2.0, 1.0]])
    assert duality_gap(x, g, [3.0], 2.0, 1.0) == pytest.approx(0.0)
    assert duality_gap(np.array([[1.0, 1.0, 1.0]]), g, [3.0], 2.0, 1.0) == pytest.approx(2.0)


# centralized solve


def test_single_ev_two_slots_matches_kkt_bisection():
    # memoryless thermal model: each slot's cost depends on its own load only
    s = make_scenario([2.0], [80.0, 20.0], v_max=3.0, delta_h=1.0, a=0.0, b2=0.0)
    p = s.thermal
    E = 2.0

    def slope(u, c):
        return p.alpha * np.exp(p.alpha * (p.b1 * u ** 2 + c) + p.beta) * 2 * p.b1 * u / s.nominal_kw

    c = p.amb_gain * (p.amb_offset + s.ambient)
    u = lambda v, t: (s.nonev_kw[t] + v) / s.nominal_kw  # noqa: E731
    v1 = bisect_root(lambda x: slope(u(x, 0), c[0]) - slope(u(E - x, 1), c[1]), max(0.0, E - 3.0), min(3.0, E))
    rep = solve_centralized(s, SolveOptions(kkt_tol=1e-12))
    assert rep.profile.v[0, 1] > rep.profile.v[0, 0]
    assert rep.profile.v[0, 0] == pytest.approx(v1, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_solver_beats_grid_and_random_profiles(seed):
    rng = np.random.default_rng(seed)
    s = random_small(rng, 2, 3)
    rep = solve_centralized(s)
    assert rep.constraints.feasible
    assert rep.cost <= grid_best(s) + 1e-6
    assert all(rep.cost <= oracle_cost(v, s) for v in random_feasible(rng, s, 200))


def test_zero_demand_gives_zero_profile():
    s = make_scenario([0.0, 0.0], [40.0, 60.0, 30.0])
    rep = solve_centralized(s)
    np.testing.assert_array_equal(rep.profile.v, 0.0)
    assert rep.cost == total_cost(ChargingProfile.zeros(s), s)[0]


def test_solver_not_worse_than_uniform(shipped):
    rep = solve_centralized(shipped)
    assert rep.cost <= total_cost(uniform_profile(shipped), shipped)[0]
    assert rep.residual <= SolveOptions().kkt_tol * (1 + rep.cost)
    np.testing.assert_allclose(rep.profile.energy_kwh, shipped.demands, atol=TOL_ENERGY)


def test_refuses_nonconvex():
    s = make_scenario([1.0], [40.0, 50.0], a=0.1, b1=1.0, b2=-5.0)
    with pytest.raises(NonConvexError):
        solve_centralized(s)


def test_infeasible_carries_report():
    s = make_scenario([50.0], np.full(30, 40.0))
    with pytest.raises(InfeasibleError) as err:
        solve_centralized(s)
    assert err.value.report is not None
    assert err.value.report.energy_slack_kwh[0] < 0


def _binding_instance():
    # cold start, flat demand: the optimum back-loads charging and heats up late
    s = make_scenario([20.0, 20.0], np.full(16, 60.0), ambient=np.full(16, 15.0), x0=40.0, u0=0.6667)
    free = solve_centralized(s.replace(thermal=s.thermal.__class__(**{**vars(s.thermal), "x_max": 1e6})))
    uni_peak = total_cost(uniform_profile(s), s)[1].temps.max()
    opt_peak = free.trace.temps.max()
    return s, free, uni_peak, opt_peak


def test_hot_spot_limit_binds():
    s, free, uni_peak, opt_peak = _binding_instance()
    assert uni_peak < opt_peak
    x_max = 0.5 * (uni_peak + opt_peak)
    limited = s.replace(thermal=s.thermal.__class__(**{**vars(s.thermal), "x_max": x_max}))
    rep = solve_centralized(limited)
    assert rep.trace.temps.max() <= x_max + 1e-6
    assert rep.constraints.feasible
    assert rep.cost >= free.cost
    assert rep.cost <= total_cost(uniform_profile(limited), limited)[0]
    off = solve_centralized(limited, SolveOptions(temp_constraint=False))
    assert off.cost == pytest.approx(free.cost, rel=1e-9)
    assert off.trace.temps.max() > x_max


@pytest.mark.parametrize("demands", [[12.0, 12.0, 12.0], [18.0, 12.0, 6.0]])
def test_support_nesting(demands):
    s = make_scenario(demands, sv_style(0).nonev_kw, ambient=sv_style(0).ambient)
    rep = solve_centralized(s)
    sets = support_sets(rep.profile, 1e-6 * s.v_max)
    order = np.argsort(-np.asarray(demands))
    for hi, lo in zip(order, order[1:]):
        assert sets[lo] <= sets[hi]
    if len(set(demands)) == 1:
        assert all(x == sets[0] for x in sets)


# sum-load and allocation


def test_sum_load_constant_for_memoryless_flat_instance():
    s = make_scenario([10.0, 10.0], np.full(12, 50.0), a=0.0, b2=0.0)
    w = solve_sum_load(s)
    np.testing.assert_allclose(w, w.mean(), atol=1e-6)
    assert w.sum() * s.delta_h == pytest.approx(20.0, abs=TOL_ENERGY)


def test_sum_load_zero_demand():
    np.testing.assert_array_equal(solve_sum_load(make_scenario([0.0], [40.0, 50.0])), 0.0)


def test_sum_load_two_slots_matches_line_search():
    s = make_scenario([3.0, 2.0], [70.0, 35.0], ambient=[12.0, 9.0], delta_h=1.0)
    E = 5.0
    cost = lambda w1: oracle_cost([[w1, E - w1]], s)  # noqa: E731
    h = 1e-4
    w1 = bisect_root(lambda x: (cost(x + h) - cost(x - h)) / (2 * h), max(0.0, E - 6.0), min(6.0, E))
    w = solve_sum_load(s, SolveOptions(kkt_tol=1e-13))
    assert w[0] == pytest.approx(w1, abs=1e-6)
    assert w[1] == pytest.approx(E - w1, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_sum_load_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(2, 10))
    s = make_scenario(rng.uniform(0.1, 0.9, size=3) * 1.5 * T, rng.uniform(10, 90, size=T),
                      ambient=rng.uniform(0, 20, size=T), a=0.0, b2=0.0)
    perm = rng.permutation(T)
    sp = s.replace(nonev_kw=s.nonev_kw[perm], ambient=s.ambient[perm])
    opts = SolveOptions(kkt_tol=1e-11)
    np.testing.assert_allclose(solve_sum_load(sp, opts), solve_sum_load(s, opts)[perm], atol=1e-6)


def test_allocate_equal_split():
    s = make_scenario([6.0, 6.0], [10.0, 10.0], delta_h=1.0, v_max=3.0)
    v = allocate(np.array([6.0, 6.0]), s)
    np.testing.assert_array_equal(v.v, 3.0)


def test_allocate_proportional():
    s = make_scenario([2.0, 1.0], [10.0, 10.0, 10.0], delta_h=1.0, v_max=3.0)
    w = np.array([1.5, 0.9, 0.6])
    v = allocate(w, s)
    np.testing.assert_allclose(v.v[0], 2 * w / 3, atol=1e-15)
    np.testing.assert_allclose(v.v[1], w / 3, atol=1e-15)
    np.testing.assert_allclose(v.sum_load, w, atol=1e-12)
    np.testing.assert_allclose(v.energy_kwh, [2.0, 1.0], atol=1e-12)


def _check_allocation(v, w, s):
    assert np.max(np.abs(v.sum_load - w)) <= 1e-9
    assert np.max(np.abs(v.energy_kwh - s.demands)) <= 1e-9
    assert v.v.min() >= 0 and v.v.max() <= s.v_max + 1e-9


def test_allocate_max_flow_repair():
    s = make_scenario([10.0, 2.0], [10.0, 10.0, 10.0], delta_h=1.0, v_max=4.0)
    w = np.array([6.0, 4.0, 2.0])
    assert 10.0 / 12.0 * 6.0 > s.v_max
    _check_allocation(allocate(w, s), w, s)


def test_allocate_reports_flow_gap():
    s = make_scenario([10.0, 2.0], [10.0, 10.0, 10.0], delta_h=1.0, v_max=4.0)
    with pytest.raises(AllocationError) as err:
        allocate(np.array([12.0, 0.0, 0.0]), s)
    assert err.value.gap_kwh == pytest.approx(6.0, abs=1e-9)


def test_allocate_rejects_energy_mismatch():
    s = make_scenario([2.0], [10.0, 10.0], delta_h=1.0)
    with pytest.raises(AllocationError):
        allocate(np.array([1.0, 0.5]), s)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_allocate_postconditions_random(seed):
    rng = np.random.default_rng(seed)
    I, T = int(rng.integers(1, 6)), int(rng.integers(1, 8))
    v_true = rng.uniform(0, 3.0, size=(I, T)) * (rng.uniform(size=(I, T)) < 0.7)
    s = make_scenario(v_true.sum(axis=1) * 0.5, rng.uniform(10, 80, size=T))
    w = v_true.sum(axis=0)
    _check_allocation(allocate(w, s), w, s)


def test_two_step_single_ev_is_identity():
    s = make_scenario([8.0], sv_style(0).nonev_kw, ambient=sv_style(0).ambient)
    rep = two_step_solve(s)
    np.testing.assert_array_equal(rep.profile.v[0], rep.extra["sum_load_kw"])


@pytest.mark.parametrize("seed", range(3))
def test_two_step_matches_direct(seed):
    rng = np.random.default_rng(seed)
    s = random_small(rng, int(rng.integers(2, 8)), int(rng.integers(5, 20)))
    if not check_feasibility(s)[0]:
        pytest.skip("random instance fails the sufficient feasibility test")
    direct, two = solve_centralized(s), two_step_solve(s)
    assert two.cost == pytest.approx(direct.cost, rel=1e-4)
    assert constraint_report(two.profile, s).feasible


def test_two_step_equal_demands_share_support():
    s = sv_style(6)
    sets = support_sets(two_step_solve(s).profile, 1e-6 * s.v_max)
    assert all(x == sets[0] for x in sets)


def test_aggregate_increments_equal_demands_reduce_to_box():
    s = make_scenario([24.0] * 4, np.full(30, 40.0))
    d = aggregate_increments(s)
    # 24 kWh at 1.5 kWh per slot is exactly 16 full slots per EV
    np.testing.assert_allclose(d[:16], 12.0)
    np.testing.assert_array_equal(d[16:], 0.0)


def test_box_relaxation_can_be_unsplittable():
    s = make_scenario([10.0, 2.0], [10.0, 10.0, 10.0], delta_h=1.0, v_max=4.0)
    w = np.array([8.0, 4.0, 0.0])
    assert w.max() <= s.I * s.v_max
    with pytest.raises(AllocationError):
        allocate(w, s)
    np.testing.assert_allclose(aggregate_increments(s), [6.0, 4.0, 2.0])


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_aggregate_projection_is_nearest(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 6))
    d = np.sort(rng.uniform(0, 3, T) * (rng.uniform(size=T) < 0.8))[::-1]
    y = rng.normal(0.0, 3.0, size=T)
    x = project_aggregate(y, d)[0]
    assert x.sum() == pytest.approx(d.sum(), abs=1e-12)
    # optimality: no vertex of the permutahedron makes an acute angle with y - x
    verts = np.array([d[list(p)] for p in itertools.permutations(range(T))])
    assert np.max((verts - x) @ (y - x)) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_sum_load_is_always_splittable(seed):
    rng = np.random.default_rng(seed)
    s = random_small(rng, int(rng.integers(2, 6)), int(rng.integers(3, 12)), fill=0.9)
    if not check_feasibility(s)[0]:
        return
    w = solve_sum_load(s)
    _check_allocation(allocate(w, s), w, s)
