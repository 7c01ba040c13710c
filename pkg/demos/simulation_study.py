"""Desk-scale operating-characteristics study.

Runs a small slice of the full factorial grid (sample size x treatments x
effect size, crossed with allocation policies) and prints the six
performance measures with their Monte Carlo standard errors. The full grid
at higher repetition counts is available through the CLI:

    brar simulate --grid grid.json --nsim 2000 --seed 42 --out results.csv

Pass --full to run all 18 parameter conditions (slow on small machines).
"""

import argparse
import os

from brar.policies import PolicySpec, PowerSpec
from brar.simulate import default_grid, grid_to_csv, run_grid

parser = argparse.ArgumentParser()
parser.add_argument("--nsim", type=int, default=200)
parser.add_argument("--seed", type=int, default=42)
parser.add_argument("--workers", type=int, default=os.cpu_count())
parser.add_argument("--full", action="store_true", help="all 18 parameter conditions")
parser.add_argument("--out", default=None, help="optional CSV path")
args = parser.parse_args()

policies = [
    PolicySpec(method="equal"),
    PolicySpec(method="point_null_binomial", p_null=0.0),  # Thompson sampling
    PolicySpec(method="point_null_binomial", p_null=0.75),
    PolicySpec(method="point_null_normal", p_null=0.75),
    PolicySpec(
        method="point_null_binomial",
        p_null=0.0,
        cap=(0.1, 0.9),
        power=PowerSpec(ramp=True),
    ),
]

if args.full:
    grid = default_grid(policies, n_sim=args.nsim, seed=args.seed)
else:
    grid = default_grid(policies, n_sim=args.nsim, seed=args.seed, ns=(200,), ks=(1,), theta1s=(0.25, 0.45))

print(f"{len(grid)} conditions x {args.nsim} repetitions, {args.workers} workers")
results = run_grid(grid, workers=args.workers, csv_path=args.out)

print(f"{'condition':<42} {'RS':>7} {'REP':>7} {'S0.1':>7} {'bias':>8} {'cover':>7} {'reject':>7}")
for cond, m in results:
    print(
        f"{cond.cond_id:<42} {m.rs_mean:>7.4f} {m.rep_mean:>7.4f} {m.s01:>7.4f} "
        f"{m.bias:>+8.4f} {m.coverage:>7.4f} {m.rejection_rate:>7.4f}"
    )
if args.out:
    print(f"wrote {args.out}")
else:
    print("\nCSV preview:")
    print("\n".join(grid_to_csv(results).splitlines()[:3]))
