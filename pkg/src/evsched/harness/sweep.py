"""Policy comparison sweeps over fleet size and forecast quality."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from ..baselines import PacConfig, pac_policy, uniform_policy
from ..central import SolveOptions, solve_centralized, two_step_solve
from ..distributed import BrdConfig, brd_run
from ..errors import ScenarioError
from ..problem import ChargingProfile, Scenario
from .io import load_scenario
from .metrics import PolicyMetrics, evaluate, relative_loss
from .noise import ForecastNoise, apply_forecast_noise
from .synth import synth_demand

POLICIES = ("central", "two_step", "ddc", "ivfa", "rect", "pac", "uniform")
COMPARISON_HEADER = ["policy", "n_ev", "fsnr_db", "seed", "lifetime_years", "peak_temp_c",
                     "total_joule_kwh", "total_cost", "shutdown_violated", "energy_shortfall_kwh"]


@dataclass
class RunSpec:
    scenario_path: Optional[str] = None
    synthetic: Optional[dict] = None
    policies: Sequence[str] = ("central", "ddc", "ivfa", "rect", "pac")
    ev_counts: Optional[Sequence[int]] = None
    demand_kwh: Optional[float] = None
    fsnr_db: Sequence[float] = (math.inf,)
    noise_seeds: Sequence[int] = (0,)
    seed: int = 0
    rect_power: Optional[float] = None
    max_rounds: int = 50
    out: Optional[str] = None
    base_dir: Path = field(default=Path("."), repr=False)

    def __post_init__(self):
        if (self.scenario_path is None) == (self.synthetic is None):
            raise ValueError("a run needs exactly one scenario source (scenario_path or synthetic)")
        bad = set(self.policies) - set(POLICIES)
        if bad:
            raise ValueError(f"unknown policies {sorted(bad)}")

    @classmethod
    def from_file(cls, path) -> "RunSpec":
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ScenarioError(f"YAML parse error: {exc}", line=mark.line + 1 if mark else None, path=path) from exc
        if "fsnr_db" in doc:
            doc["fsnr_db"] = [_parse_fsnr(x) for x in doc["fsnr_db"]]
        try:
            return cls(base_dir=path.parent, **doc)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"invalid run spec: {exc}", path=path) from exc

    def scenario(self) -> Scenario:
        if self.scenario_path is not None:
            return load_scenario(self.base_dir / self.scenario_path)
        params = dict(self.synthetic)
        n_ev = int(params.pop("n_ev", 15))
        demand = float(params.pop("demand_kwh", 24.0))
        v_max = float(params.pop("v_max", 3.0))
        nominal = float(params.get("nominal_kw", 90.0))
        delta_h = float(params.get("delta_h", 0.5))
        nonev, ambient = synth_demand(**params)
        return Scenario(delta_h, np.full(n_ev, demand), v_max, nominal, nonev, ambient)


def _parse_fsnr(x) -> float:
    if isinstance(x, str) and x.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(x)


class SweepError(RuntimeError):
    def __init__(self, cell, cause):
        super().__init__(f"sweep cell {cell} failed: {cause}")
        self.cell = cell


def plan(policy: str, s: Scenario, seed: int = 0, rect_power: Optional[float] = None,
         max_rounds: int = 50, opts: SolveOptions = SolveOptions()) -> ChargingProfile:
    """Charging profile chosen by ``policy`` for scenario ``s``."""
    if policy == "central":
        return solve_centralized(s, opts).profile
    if policy == "two_step":
        return two_step_solve(s, opts).profile
    if policy in ("ddc", "ivfa", "rect"):
        cfg = BrdConfig(rule=policy, max_rounds=max_rounds, rect_power=rect_power, seed=seed, solve=opts)
        return brd_run(s, cfg)[0].profile
    if policy == "pac":
        return pac_policy(s, PacConfig(seed=seed))
    if policy == "uniform":
        return uniform_policy(s)
    raise ValueError(f"unknown policy {policy!r}")


def run_cell(policy: str, truth: Scenario, noise: Optional[ForecastNoise] = None, seed: int = 0,
             rect_power: Optional[float] = None, max_rounds: int = 50) -> tuple[ChargingProfile, PolicyMetrics]:
    """Plan on the (possibly noisy) forecast, evaluate on the true demand.

    A noisy forecast may look too hot to schedule at all; planners then drop
    the hot-spot limit and only the true trace decides a shutdown.
    """
    planning, opts = truth, SolveOptions()
    if noise is not None and not noise.noiseless:
        planning = truth.replace(nonev_kw=apply_forecast_noise(truth.nonev_kw, noise))
        opts = SolveOptions(temp_constraint=False)
    profile = plan(policy, planning, seed=seed, rect_power=rect_power, max_rounds=max_rounds, opts=opts)
    return profile, evaluate(profile, truth)


def compare_policies(spec: RunSpec) -> list[dict]:
    base = spec.scenario()
    demand = spec.demand_kwh if spec.demand_kwh is not None else (
        float(base.demands[0]) if base.I else 24.0)
    counts = spec.ev_counts if spec.ev_counts is not None else [base.I]
    rows = []
    for n_ev in counts:
        truth = base if spec.ev_counts is None else base.with_fleet(int(n_ev), demand)
        for fsnr in spec.fsnr_db:
            seeds = [0] if math.isinf(fsnr) and fsnr > 0 else spec.noise_seeds
            for noise_seed in seeds:
                noise = ForecastNoise(fsnr, seed=noise_seed)
                for policy in spec.policies:
                    cell = {"policy": policy, "n_ev": int(n_ev), "fsnr_db": fsnr, "seed": noise_seed}
                    try:
                        _, metrics = run_cell(policy, truth, noise, seed=spec.seed,
                                              rect_power=spec.rect_power, max_rounds=spec.max_rounds)
                    except Exception as exc:  # noqa: BLE001
                        raise SweepError(cell, exc) from exc
                    rows.append({**cell, **vars(metrics.rounded())})
    return rows


def format_comparison(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_HEADER)
    for r in rows:
        w.writerow([
            r["policy"], int(r["n_ev"]), repr(float(r["fsnr_db"])), int(r["seed"]),
            f"{r['lifetime_years']:.2f}", f"{r['peak_temp_c']:.2f}", f"{r['total_joule_kwh']:.3f}",
            repr(float(r["total_cost"])), "true" if r["shutdown_violated"] else "false",
            f"{r['energy_shortfall_kwh']:.3f}",
        ])
    return buf.getvalue()


def parse_comparison(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != COMPARISON_HEADER:
        raise ScenarioError("unexpected comparison header", line=1)
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(COMPARISON_HEADER):
            raise ScenarioError(f"expected {len(COMPARISON_HEADER)} fields", line=lineno)
        r = dict(zip(COMPARISON_HEADER, rec))
        rows.append({
            "policy": r["policy"], "n_ev": int(r["n_ev"]), "fsnr_db": float(r["fsnr_db"]),
            "seed": int(r["seed"]), "lifetime_years": float(r["lifetime_years"]),
            "peak_temp_c": float(r["peak_temp_c"]), "total_joule_kwh": float(r["total_joule_kwh"]),
            "total_cost": float(r["total_cost"]), "shutdown_violated": r["shutdown_violated"] == "true",
            "energy_shortfall_kwh": float(r["energy_shortfall_kwh"]),
        })
    return rows


def write_comparison(rows: Sequence[dict], path):
    Path(path).write_text(format_comparison(rows))


def lifetime_losses(rows: Sequence[dict]) -> dict:
    """Mean relative lifetime loss per (policy, n_ev, fsnr) against the
    noiseless row of the same policy and fleet size."""
    reference = {(r["policy"], r["n_ev"]): r["lifetime_years"] for r in rows
                 if math.isinf(r["fsnr_db"])}
    losses = defaultdict(list)
    for r in rows:
        if math.isinf(r["fsnr_db"]):
            continue
        ref = reference[(r["policy"], r["n_ev"])]
        losses[(r["policy"], r["n_ev"], r["fsnr_db"])].append(relative_loss(ref, r["lifetime_years"]))
    return {k: float(np.mean(v)) for k, v in losses.items()}
