"""Transformer lifetime of each policy as the EV fleet grows (perfect forecast).

Writes the comparison CSV produced by ``evsched sweep``.
"""

import argparse
import sys

from evsched.harness import RunSpec, compare_policies, default_scenario_path, format_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(default_scenario_path()))
    ap.add_argument("--max-ev", type=int, default=30)
    ap.add_argument("--step", type=int, default=3)
    ap.add_argument("--policies", default="central,ddc,ivfa,rect,pac")
    ap.add_argument("--out")
    args = ap.parse_args()
    spec = RunSpec(scenario_path=args.scenario, policies=tuple(args.policies.split(",")),
                   ev_counts=list(range(0, args.max_ev + 1, args.step)), demand_kwh=24.0)
    text = format_comparison(compare_policies(spec))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
