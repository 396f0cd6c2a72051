"""Recompute the independent oracle values and write tests/data/oracles.json.

Run from the repository root: python3 scripts/freeze_oracles.py
"""
import json
import math
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402

S_GUE2 = [-1.0, 0.0, 0.5, 1.3, 2.0]
AIRY_X = [-10.0, -2.0, 0.0, 1.0, 5.0]
PHI_S = [-2.0, -0.5, 0.0, 1.0, 3.0]
POISSON_T = 100.0
POISSON_S = [-1.0, 0.0, 1.0, 2.0]
MIX = {"a": 0, "b": 0, "N": 1, "p": 0.75, "lo": -8, "hi": 8}
GUE = {"s": 0.0, "n_samples": 10**6, "N": 10**6, "rows": 1200, "seed": 1}


def _mc(hn, **meta):
    hits, n = hn
    ph = hits / n
    return dict(meta, hits=hits, n_samples=n, estimate=ph, se=math.sqrt(ph * (1 - ph) / n))


def main():
    t0 = time.time()
    hits, n = oracles.gue_edge_mc(GUE["s"], GUE["n_samples"], GUE["N"], GUE["rows"], GUE["seed"])
    out = {
        "gue_edge_mc": _mc((hits, n), **GUE, method="Dumitriu-Edelman beta=2 tridiagonal, Sturm count"),
        "brownian_sup2_mc": _mc(oracles.brownian_sup2_mc(0.0, 10**6), s=0.0, seed=2,
                                method="exact endpoint-conditioned Brownian maximum"),
        "gue2_cdf": {repr(s): oracles.gue2_cdf(s) for s in S_GUE2},
        "airy_ai": {repr(x): oracles.airy_mp(x) for x in AIRY_X},
        "phi": {repr(s): oracles.phi_cdf(s) for s in PHI_S},
        "poisson_step_m1": {
            "t": POISSON_T,
            "values": {repr(s): oracles.poisson_walk_tail(POISSON_T - s * math.sqrt(POISSON_T), POISSON_T)
                       for s in POISSON_S},
        },
        "mixing_single_gap": dict(MIX, mean=oracles.mixing_mean_exact(**MIX),
                                  method="generator solve on a finite window"),
    }
    path = ROOT / "tests" / "data" / "oracles.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path} in {time.time() - t0:.0f}s")


if __name__ == "__main__":
    main()
