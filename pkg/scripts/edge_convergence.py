"""Distance of F_{M,p} (edge-scaled) and F_{M,1} to F_GUE along M."""
import argparse
import math

from asep.twdist import edge_argument, f_gue, f_M1, f_Mp

ap = argparse.ArgumentParser()
ap.add_argument("--p", type=float, default=0.75)
ap.add_argument("--M", default="4,8,16,32,64")
ap.add_argument("--s", default="-2,-1,0,1,2")
args = ap.parse_args()
Ms = [int(x) for x in args.M.split(",")]
print("s      " + "".join(f"M={M:<9d}" for M in Ms) + "   M^(1/3) * err at largest M")
for s in map(float, args.s.split(",")):
    g = f_gue(s)
    errs = [abs(f_Mp(edge_argument(s, M, args.p), M, args.p) - g) for M in Ms]
    print(f"{s:<6g} " + "".join(f"{e:<11.3e}" for e in errs) + f"   {errs[-1] * Ms[-1] ** (1 / 3):.3f}")
for M in (25, 100, 200):
    e = max(abs(f_M1(2 * math.sqrt(M) + s * M ** (-1 / 6), M) - f_gue(s)) for s in (-2.0, 0.0, 2.0))
    print(f"F_M1 edge error, M={M}: {e:.2e}")
