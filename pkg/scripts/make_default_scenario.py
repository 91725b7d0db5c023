"""Regenerate the shipped evening-peak scenario (15 EVs, 17:00 to 08:00)."""

import argparse

import numpy as np

from evsched.harness import default_scenario_path, save_scenario, synth_demand
from evsched.problem import Scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(default_scenario_path()))
    ap.add_argument("--n-ev", type=int, default=15)
    ap.add_argument("--households", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    nonev, ambient = synth_demand("evening_peak", args.households, seed=args.seed)
    s = Scenario(delta_h=0.5, demands=np.full(args.n_ev, 24.0), v_max=3.0, nominal_kw=90.0,
                 nonev_kw=nonev, ambient=ambient)
    print(save_scenario(s, args.out))


if __name__ == "__main__":
    main()
