"""Mean relative lifetime loss against forecast SNR for the BRD policies."""

import argparse
import csv
import math
import sys

from evsched.harness import RunSpec, compare_policies, default_scenario_path
from evsched.harness.sweep import lifetime_losses


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(default_scenario_path()))
    ap.add_argument("--fsnr", default="-5,0,5,10,15,20", help="comma-separated dB values")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--policies", default="ddc,ivfa,rect")
    args = ap.parse_args()
    fsnr = [float(x) for x in args.fsnr.split(",")]
    spec = RunSpec(scenario_path=args.scenario, policies=tuple(args.policies.split(",")),
                   fsnr_db=[math.inf, *fsnr], noise_seeds=list(range(args.seeds)))
    losses = lifetime_losses(compare_policies(spec))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["policy", "n_ev", "fsnr_db", "mean_relative_loss"])
    for (policy, n_ev, db), loss in sorted(losses.items(), key=lambda kv: (kv[0][0], kv[0][2])):
        w.writerow([policy, n_ev, db, f"{loss:.4f}"])


if __name__ == "__main__":
    main()
