#!/usr/bin/env python3
"""Mean system cost vs. server compute capacity, all algorithms.

Sweeps the server speed cap over 5..8 GHz with paired seeds and writes
metrics.csv / runs.csv under --out.  More capacity should never hurt: every
cost curve printed here is nonincreasing left to right.
"""

import argparse

from coopmec.harness import ALGORITHMS, ExperimentSpec, run_experiment
from coopmec.scenario import GenConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10, help="tasks per scenario")
    ap.add_argument("--realizations", type=int, default=100)
    ap.add_argument("--out", default="results/capacity")
    args = ap.parse_args()

    spec = ExperimentSpec(algorithms=ALGORITHMS, base=GenConfig(n=args.n),
                          sweep_var="f0_max",
                          sweep_values=(5e9, 6e9, 7e9, 8e9),
                          realizations=args.realizations, out=args.out)
    table, _ = run_experiment(spec)

    caps = spec.sweep_values
    print(f"{'algorithm':<10}" + "".join(f"{c / 1e9:>9.0f}GHz" for c in caps))
    for algo in ALGORITHMS:
        row = {r.sweep_value: r.mean_total_cost for r in table
               if r.algorithm == algo}
        print(f"{algo:<10}" + "".join(f"{row[c]:>12.4f}" for c in caps))
    print(f"\nwrote {args.out}/metrics.csv and runs.csv")


if __name__ == "__main__":
    main()
