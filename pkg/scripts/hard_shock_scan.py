"""Fixed-M hard-shock estimates over a ladder of M at fixed t/M.

    python3 -u scripts/hard_shock_scan.py --ratio 16 --M 8,27,64 --trials 2000

Prints, per M, the block length, the estimates against the product law and
their grid distance.  Below ratio 4/(p-q) the middle block is empty.
"""
import argparse

from asep.experiments import hard_shock_ladder
from asep.initcond import block_length

ap = argparse.ArgumentParser()
ap.add_argument("--p", type=float, default=0.75)
ap.add_argument("--ratio", type=float, default=16.0)
ap.add_argument("--M", default="8,27,64")
ap.add_argument("--lam", type=float, default=0.0)
ap.add_argument("--xi", default="0,0.5,1")
ap.add_argument("--trials", type=int, default=2000)
ap.add_argument("--seed", type=int, default=1)
ap.add_argument("--jobs", type=int, default=1)
args = ap.parse_args()
Ms = [int(x) for x in args.M.split(",")]
xi = [float(x) for x in args.xi.split(",")]
runs, claim = hard_shock_ladder(Ms, args.ratio, args.lam, xi, args.p, args.trials,
                                seed=args.seed, jobs=args.jobs)
for M, r in zip(Ms, runs):
    L = block_length(args.p, args.ratio * M, M=M)
    pts = "  ".join(f"{e.point}: {e.value:.4f}/{e.reference:.4f}" for e in r.estimates)
    print(f"M={M:<4d} t={args.ratio * M:<7g} L={L:<5d} d={r.ks_distance:.4f}  {pts}  ({r.wall_time:.0f}s)")
print(f"{claim.name}: {'yes' if claim.passed else 'no'} ({claim.detail})")
