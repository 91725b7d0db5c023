"""Hot-spot temperature over the night for every policy on one scenario.

Long format CSV: policy,slot,load_pu,temp_c,faa.
"""

import argparse
import csv
import sys

from evsched.harness import default_scenario_path, load_scenario
from evsched.harness.sweep import POLICIES, plan
from evsched.problem import total_cost


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(default_scenario_path()))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    s = load_scenario(args.scenario)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["policy", "slot", "load_pu", "temp_c", "faa"])
    for policy in POLICIES:
        profile = plan(policy, s, seed=args.seed)
        _, trace = total_cost(profile, s)
        u = s.per_unit(profile.sum_load)
        for t in range(s.T):
            w.writerow([policy, t + 1, f"{u[t]:.4f}", f"{trace.temps[t]:.3f}", f"{trace.faa[t]:.5g}"])


if __name__ == "__main__":
    main()
