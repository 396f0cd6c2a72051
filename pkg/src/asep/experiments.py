"""Monte Carlo experiments: each maps a limit statement or coupling property to
an estimator with Wilson intervals, a reference value and a pass/fail claim.

Every runner returns an :class:`ExperimentResult`.  Trials use seeds
``derive_seed(spec.seed, k)``, so a result depends only on its spec.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .clockfield import derive_seed
from .dynamics import BatchResult, BatchSpec, Watch, run_batch
from .initcond import (InitSpec, blocking_marginal, blocking_window, build, default_window,
                       exact, sample_blocking, shift_c)
from .lattice import omega_index, round_label
from .twdist import DistLaw, transition_scale

Z95 = 1.959963984540054
Z_ONE_SIDED = 1.6448536269514722
ALLOWANCE = 0.03
INVALID_LIMIT = 0.01
KAPPA_DEFAULT = 0.75
DELTA_DEFAULT = 0.1
CHI_DEFAULT = 0.4
NU_LIMIT = 3.0 / 7.0

OPS = (
    "step_law", "discrete_shock", "cutoff", "hard_shock", "tasep_transition", "harris",
    "blocking_stationarity", "leftmost_tail", "mixing", "slow_decorrelation", "independence",
)

_BLOCK_SALT = 0xB10C


class SpecError(ValueError):
    """An experiment spec violates its schema; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# -- statistics -------------------------------------------------------------
def wilson(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("no trials")
    ph = successes / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if successes == 0 else max(0.0, mid - half)
    hi = 1.0 if successes == n else min(1.0, mid + half)
    return lo, hi


def ks_distance(estimates: Sequence[float], reference: Sequence[float]) -> float:
    """Largest absolute gap between two curves on a common grid."""
    a = np.asarray(estimates, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.size == 0:
        raise ValueError("empty grid")
    if a.shape != b.shape:
        raise ValueError("estimates and reference must share a grid")
    return float(np.max(np.abs(a - b)))


def dkw_bound(n: int, alpha: float = 0.05) -> float:
    """Dvoretzky-Kiefer-Wolfowitz band for an empirical CDF of ``n`` samples.

    A difference of two such CDFs gets ``sqrt(2)`` times this band.
    """
    return math.sqrt(math.log(2 / alpha) / (2 * n))


def linear_fit(x, y, w=None):
    """Weighted least squares y = a + b x; returns (a, b, r2)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    w = np.ones_like(x) if w is None else np.asarray(w, float)
    W = w.sum()
    mx, my = (w * x).sum() / W, (w * y).sum() / W
    sxx = (w * (x - mx) ** 2).sum()
    b = (w * (x - mx) * (y - my)).sum() / sxx
    a = my - b * mx
    ss_res = (w * (y - a - b * x) ** 2).sum()
    ss_tot = (w * (y - my) ** 2).sum()
    return float(a), float(b), float(1 - ss_res / ss_tot) if ss_tot > 0 else 1.0


# -- specs and results ------------------------------------------------------
@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative experiment.

    ``op`` picks the runner; ``params`` holds its grid and label arguments
    (see the ``run_*`` signatures).  ``scalings`` carries exponents: ``kappa``
    (slow decorrelation, independence), ``nu`` (power-law hard shock),
    ``delta`` (running-inf leftmost tail) and ``chi``.
    """

    name: str
    op: str
    p: float
    t: float
    trials: int
    params: dict = field(default_factory=dict)
    scalings: dict = field(default_factory=dict)
    seed: int = 0
    exploratory: bool = False
    observable: str = ""
    reference: str = ""

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise SpecError(sorted(extra)[0], "unknown field")
        for req in ("name", "op", "p", "t", "trials"):
            if req not in d:
                raise SpecError(req, "missing")
        return cls(**d)


def validate(spec: ExperimentSpec):
    if not isinstance(spec.name, str) or not spec.name:
        raise SpecError("name", "must be a nonempty string")
    if spec.op not in OPS:
        raise SpecError("op", f"unknown operation {spec.op!r}; expected one of {', '.join(OPS)}")
    if not 0.5 < spec.p <= 1.0:
        raise SpecError("p", "must lie in (1/2, 1]")
    if not spec.t >= 0:
        raise SpecError("t", "must be nonnegative")
    if not (isinstance(spec.trials, int) and spec.trials >= 1):
        raise SpecError("trials", "must be a positive integer")
    if not 0 <= spec.seed < 2**64:
        raise SpecError("seed", "must be a 64-bit unsigned integer")
    sc = spec.scalings
    unknown = set(sc) - {"kappa", "nu", "delta", "chi"}
    if unknown:
        raise SpecError(f"scalings.{sorted(unknown)[0]}", "unknown exponent")
    if "kappa" in sc:
        k = sc["kappa"]
        if spec.op == "independence" and not 0.5 < k < 1:
            if not (spec.exploratory and 0 < k < 1):
                raise SpecError("scalings.kappa", f"kappa = {k} outside (1/2, 1)")
        elif not 0 < k < 1:
            raise SpecError("scalings.kappa", f"kappa = {k} outside (0, 1)")
    if "nu" in sc:
        nu = sc["nu"]
        if not 0 < nu < 1:
            raise SpecError("scalings.nu", f"nu = {nu} outside (0, 1)")
        if nu >= NU_LIMIT and not spec.exploratory:
            raise SpecError("scalings.nu", f"nu = {nu} >= 3/7 needs the exploratory flag")
    if "delta" in sc and not 0 < sc["delta"] < 0.5:
        raise SpecError("scalings.delta", "delta must lie in (0, 1/2)")
    if "chi" in sc and not 0 < sc["chi"] < 0.5:
        raise SpecError("scalings.chi", "chi must lie in (0, 1/2)")
    P = spec.params
    if spec.op in ("tasep_transition",) and spec.p != 1.0:
        raise SpecError("p", "the beta transition is a TASEP statement (p = 1)")
    if spec.op in ("blocking_stationarity",) and spec.p == 1.0:
        raise SpecError("p", "the blocking measure needs q > 0")
    if spec.op == "cutoff":
        for s in _as_list(P.get("s", 1.0)):
            if s == 0:
                raise SpecError("params.s", "s = 0 is excluded")
    if spec.op == "harris" and P.get("r1", -1) == P.get("r2", -5):
        raise SpecError("params.r2", "the two tagged particles must differ")
    if spec.op == "hard_shock" and P.get("mode", "fixed_m") == "power_law" and "nu" not in sc:
        raise SpecError("scalings.nu", "power-law mode needs nu")


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass
class Estimate:
    point: str
    value: float
    ci_lo: float
    ci_hi: float
    reference: Optional[float] = None
    successes: int = 0
    n: int = 0

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_hi - self.ci_lo)


@dataclass
class Claim:
    name: str
    passed: bool
    detail: str = ""
    gating: bool = True

    def __post_init__(self):
        self.passed = bool(self.passed)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    estimates: list = field(default_factory=list)
    claims: list = field(default_factory=list)
    invalid_fraction: float = 0.0
    ks_distance: Optional[float] = None
    audits: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    laws: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def flagged(self) -> bool:
        return self.invalid_fraction >= INVALID_LIMIT

    @property
    def passed(self) -> bool:
        return not self.flagged and all(c.passed for c in self.claims if c.gating)

    def estimate(self, point: str) -> Estimate:
        for e in self.estimates:
            if e.point == point:
                return e
        raise KeyError(point)

    def record(self) -> dict:
        """JSON-ready summary; excludes wall time so identical specs give identical bytes."""
        return plain({
            "spec": self.spec.to_dict(),
            "version": __version__,
            "spec_hash": spec_hash(self.spec),
            "seeds": self.seeds,
            "invalid_fraction": self.invalid_fraction,
            "flagged": self.flagged,
            "passed": self.passed,
            "ks_distance": self.ks_distance,
            "estimates": [asdict(e) for e in self.estimates],
            "claims": [asdict(c) for c in self.claims],
            "audits": self.audits,
            "extras": self.extras,
            "laws": [law.name for law in self.laws],
        })


def plain(obj):
    """Recursively replace numpy scalars and arrays by Python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def spec_hash(spec: ExperimentSpec) -> str:
    import hashlib
    blob = json.dumps(plain(spec.to_dict()), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _prob(point, hits, n, reference=None) -> Estimate:
    lo, hi = wilson(int(hits), int(n))
    return Estimate(point, hits / n, lo, hi, reference, int(hits), int(n))


def _within(est: Estimate, allowance: float) -> bool:
    return abs(est.value - est.reference) <= est.half_width + allowance


def _distance_claim(name, ests, allowance, gating=True) -> Claim:
    worst = max(abs(e.value - e.reference) - e.half_width for e in ests)
    ok = all(_within(e, allowance) for e in ests)
    return Claim(name, ok, f"max(|est-ref| - halfwidth) = {worst:.4f} vs allowance {allowance}", gating)


def _fmt(x) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


# -- simulation helpers -----------------------------------------------------
def _union_window(specs: Sequence[InitSpec], p, horizon, guard) -> tuple[int, int]:
    ws = [default_window(s, p, horizon, guard) for s in specs]
    return min(w[0] for w in ws), max(w[1] for w in ws)


def _simulate(members, p, seed, times, watches, trials, jobs=1, pairs=(), **kw) -> BatchResult:
    spec = BatchSpec(list(members), float(p), int(seed), np.asarray(times, dtype=float),
                     list(watches), list(pairs), **kw)
    return run_batch(spec, trials, jobs=jobs)


def _static(members, watches, trials, times) -> BatchResult:
    """Outcome of zero-length runs: every trial keeps its initial sites."""
    sites = np.array([w.initial_site(members[w.member]) for w in watches], dtype=np.int64)
    k, nt, nw = trials, len(times), len(watches)
    return BatchResult(0, np.ones(k, bool), np.broadcast_to(sites, (k, nt, nw)).copy(),
                       np.broadcast_to(sites, (k, nw)).copy(), np.broadcast_to(sites, (k, nw)).copy(),
                       np.zeros(k, np.int64), np.full(k, np.nan), np.zeros(k, np.int64),
                       np.zeros((k, 2), np.int64))


def _result(spec, res: Optional[BatchResult], t0, **kw) -> ExperimentResult:
    out = ExperimentResult(spec, **kw)
    if res is not None:
        out.invalid_fraction = res.invalid_fraction
        out.audits.setdefault("order_violations", int(res.order_violations.sum()))
    out.seeds = {"master": int(spec.seed), "first_trial": 0, "trials": int(spec.trials),
                 "rule": "trial k uses derive_seed(master, k)"}
    out.wall_time = time.perf_counter() - t0
    if out.flagged:
        out.claims.append(Claim("invalid_fraction", False,
                                f"invalid fraction {out.invalid_fraction:.4f} >= {INVALID_LIMIT}"))
    return out


def _spec(name, op, p, t, trials, seed, params, scalings=None, exploratory=False,
          observable="", reference=""):
    return ExperimentSpec(name, op, float(p), float(t), int(trials), params, scalings or {},
                          int(seed), exploratory, observable, reference)


class LawBook:
    """Reference laws used by one run, each with its evaluation table."""

    def __init__(self):
        self.laws: dict = {}

    def law(self, kind: str, **params) -> DistLaw:
        key = (kind, tuple(sorted(params.items())))
        if key not in self.laws:
            self.laws[key] = DistLaw(kind, dict(params))
        return self.laws[key]

    def step(self, M: int, p: float, s: float) -> float:
        """F_{M,p}(s); the TASEP case goes to the p = 1 law."""
        if p == 1.0:
            return self.law("FM1", M=int(M))(s)
        return self.law("FMp", M=int(M), p=float(p))(s)

    def values(self) -> list:
        return list(self.laws.values())


# -- step law ---------------------------------------------------------------
def run_step_law(M: int, p: float, t: float, trials: int, s_grid=(-1, 0, 1, 2),
                 t_grid: Optional[Sequence[float]] = None, seed: int = 0, jobs: int = 1,
                 allowance: float = ALLOWANCE, guard: int = 10, name: str = "step_law"):
    """P(x_M(t) >= (p-q)(t - s t^(1/2))) for step data, against F_{M,p}(s).

    ``t_grid`` samples the same runs at several times; the distance to the
    law must then be nonincreasing along it.
    """
    t0 = time.perf_counter()
    book = LawBook()
    times = sorted(set(float(x) for x in (t_grid or [t])) | {float(t)})
    spec = _spec(name, "step_law", p, t, trials, seed,
                 {"M": M, "s_grid": list(s_grid), "t_grid": times, "allowance": allowance},
                 observable=f"x_{M}(t) of step data", reference=f"F_{{{M},p}}")
    cfg = build(InitSpec("step"), p, horizon=max(times), guard=guard)
    res = _simulate([cfg], p, seed, times, [Watch(0, M)], trials, jobs, guard_margin=guard)
    ok = res.valid
    d = 2 * float(exact(p)) - 1
    refs = {s: book.step(M, p, s) for s in s_grid}
    ests, dists = [], []
    for i, tt in enumerate(times):
        x = res.samples[ok, i, 0]
        row = []
        for s in s_grid:
            thr = d * (tt - s * math.sqrt(tt))
            e = _prob(f"t={_fmt(tt)};s={_fmt(s)}", np.count_nonzero(x >= thr), x.size, refs[s])
            row.append(e)
        ests.extend(row)
        dists.append(ks_distance([e.value for e in row], [e.reference for e in row]))
    final = [e for e in ests if e.point.startswith(f"t={_fmt(t)};")]
    claims = [_distance_claim(f"distance at t={_fmt(t)}", final, allowance)]
    if len(times) > 1:
        mono = all(b <= a for a, b in zip(dists, dists[1:]))
        claims.append(Claim("distance nonincreasing in t", mono,
                            "distances " + ", ".join(f"{x:.4f}" for x in dists)))
    return _result(spec, res, t0, laws=book.values(), estimates=ests, claims=claims, ks_distance=dists[-1],
                   extras={"distance_by_t": dict(zip(map(_fmt, times), dists))})


# -- coupled triple (IC), (A), (B) ------------------------------------------
def _shock_members(p, t, C, M, guard):
    par = {"t": t}
    if C is None:
        par["M"] = M
    else:
        par["C"] = C
    specs = [InitSpec("a_data", par), InitSpec("shock_ic", par), InitSpec("b_data", par)]
    w = _union_window(specs, p, t, guard)
    return [build(s, p, window=w) for s in specs]


def _shock_reference(book, M, R, C, p):
    if R >= M:
        return book.step(M, p, C)
    return book.step(M, p, C) * book.step(M - R, p, C)


def run_discrete_shock(M: int, R_grid, p: float, t: float, C: Optional[float] = None,
                       trials: int = 1000, seed: int = 0, jobs: int = 1,
                       audit_labels: Optional[Sequence[int]] = None,
                       allowance: float = ALLOWANCE, gate_distance: bool = True,
                       guard: int = 10, name: str = "discrete_shock"):
    """P(y_M(t) >= -R) with y = min(x^A, x^B), under the basic coupling of the
    shock data with its A/B parts.  ``C`` defaults to 2 sqrt(M / (p-q)).

    Audits: y_n >= x_n (equality at p = 1) for every audited label and
    pointwise order A <= eta <= B throughout.
    """
    t0 = time.perf_counter()
    book = LawBook()
    labels = sorted(set(audit_labels or [M]) | {M})
    Cval = shift_c(M, p) if C is None else float(C)
    spec = _spec(name, "discrete_shock", p, t, trials, seed,
                 {"M": M, "R_grid": list(R_grid), "C": C, "audit_labels": labels,
                  "allowance": allowance, "gate_distance": gate_distance},
                 observable=f"y_{M}(t) = min(x^A_{M}, x^B_{M})",
                 reference="F_{M,p}(C) [* F_{M-R,p}(C) for R < M]")
    members = _shock_members(p, t, C, M, guard)
    watches = [Watch(m, n) for n in labels for m in range(3)]
    res = _simulate(members, p, seed, [t], watches, trials, jobs, pairs=[(0, 1), (1, 2)],
                    guard_margin=guard)
    ok = res.valid
    S = res.samples[ok, -1, :]
    k = labels.index(M)
    xa, x, xb = S[:, 3 * k], S[:, 3 * k + 1], S[:, 3 * k + 2]
    y = np.minimum(xa, xb)
    ests = [_prob(f"y:R={R}", np.count_nonzero(y >= -R), y.size, _shock_reference(book, M, R, Cval, p))
            for R in R_grid]
    xests = [_prob(f"x:R={R}", np.count_nonzero(x >= -R), x.size) for R in R_grid]
    Y = np.minimum(S[:, 0::3], S[:, 2::3])
    X = S[:, 1::3]
    bad_y = int(np.count_nonzero(np.any(Y < X, axis=1)))
    bad_eq = int(np.count_nonzero(np.any(Y != X, axis=1)))
    viol = int(np.count_nonzero(res.order_violations[ok]))
    claims = [Claim("domination y >= x", bad_y == 0, f"{bad_y} trials with y_n < x_n"),
              Claim("attractivity", viol == 0, f"{viol} trials with an order violation")]
    if p == 1.0:
        claims.append(Claim("TASEP identity y = x", bad_eq == 0, f"{bad_eq} trials with y_n != x_n"))
    claims.append(_distance_claim("product law", ests, allowance, gating=gate_distance))
    audits = {"trials_y_below_x": bad_y, "trials_y_ne_x": bad_eq, "order_violation_trials": viol,
              "valid_trials": int(ok.sum()), "labels": labels}
    return _result(spec, res, t0, laws=book.values(), estimates=ests + xests, claims=claims, audits=audits,
                   ks_distance=ks_distance([e.value for e in ests], [e.reference for e in ests]),
                   extras={"C": Cval})


def run_cutoff(M: int, p: float, t: float, C: Optional[float] = None, s=1.0, trials: int = 1000,
               seed: int = 0, jobs: int = 1, allowance: float = ALLOWANCE, guard: int = 10,
               name: str = "cutoff"):
    """P(x_M(t) >= -(p-q) s t^(1/2)) for the shock data, against F_{M,p}(s + C) 1{s > 0}."""
    t0 = time.perf_counter()
    book = LawBook()
    s_grid = _as_list(s)
    if any(v == 0 for v in s_grid):
        raise ValueError("s = 0 is excluded")
    Cval = shift_c(M, p) if C is None else float(C)
    spec = _spec(name, "cutoff", p, t, trials, seed,
                 {"M": M, "C": C, "s": s_grid, "allowance": allowance},
                 observable=f"x_{M}(t) of the shock data", reference="F_{M,p}(s+C) 1{s>0}")
    par = {"t": t, "M": M} if C is None else {"t": t, "C": C}
    cfg = build(InitSpec("shock_ic", par), p, horizon=t, guard=guard)
    res = _simulate([cfg], p, seed, [t], [Watch(0, M)], trials, jobs, guard_margin=guard)
    x = res.samples[res.valid, -1, 0]
    d = 2 * float(exact(p)) - 1
    ests = [_prob(f"s={_fmt(v)}", np.count_nonzero(x >= -d * v * math.sqrt(t)), x.size,
                  book.step(M, p, v + Cval) if v > 0 else 0.0) for v in s_grid]
    return _result(spec, res, t0, laws=book.values(), estimates=ests, claims=[_distance_claim("cutoff law", ests, allowance)],
                   ks_distance=ks_distance([e.value for e in ests], [e.reference for e in ests]))


# -- hard shock and the TASEP transition -------------------------------------
def run_hard_shock(lam: float, xi_grid, p: float, t: float, trials: int, M: Optional[int] = None,
                   nu: Optional[float] = None, seed: int = 0, jobs: int = 1,
                   exploratory: bool = False, guard: int = 10, name: str = "hard_shock"):
    """Hard-shock statistic against F_GUE(-lam) F_GUE(xi - lam).

    Fixed-M mode (``M`` given): P(x_{M + lam M^(1/3)}(t) >= -xi M^(1/3)) for the
    shock data with C = C(M).  Power-law mode (``nu`` given):
    P(X_{t^nu + lam t^(nu/3)}(t/(p-q)) >= -xi t^(nu/3)) for the IC2 data.
    Both are iterated or asymptotic limits, so no claim gates on the value.
    """
    t0 = time.perf_counter()
    book = LawBook()
    if (M is None) == (nu is None):
        raise ValueError("give exactly one of M (fixed-M mode) or nu (power-law mode)")
    d = 2 * float(exact(p)) - 1
    if M is not None:
        mode, scal = "fixed_m", {}
        label = round_label(M + lam * M ** (1 / 3), 1)
        unit = M ** (1 / 3)
        cfg = build(InitSpec("shock_ic", {"t": t, "M": M}), p, horizon=t, guard=guard)
        horizon = t
    else:
        if nu >= NU_LIMIT and not exploratory:
            raise ValueError(f"nu = {nu} >= 3/7 needs exploratory=True")
        mode, scal = "power_law", {"nu": nu}
        label = round_label(t ** nu + lam * t ** (nu / 3), 1)
        unit = t ** (nu / 3)
        horizon = t / d
        cfg = build(InitSpec("shock_ic2", {"t": t, "nu": nu}), p, horizon=horizon, guard=guard)
    spec = _spec(name, "hard_shock", p, t, trials, seed,
                 {"mode": mode, "M": M, "lam": lam, "xi_grid": list(xi_grid)},
                 scal, exploratory=exploratory, observable=f"x_{label}", reference="F_GUE(-lam)F_GUE(xi-lam)")
    res = _simulate([cfg], p, seed, [horizon], [Watch(0, label)], trials, jobs, guard_margin=guard)
    x = res.samples[res.valid, -1, 0]
    ests = [_prob(f"xi={_fmt(v)}", np.count_nonzero(x >= -v * unit), x.size,
                  book.law("ProductShock", lam=float(lam))(v)) for v in xi_grid]
    dist = ks_distance([e.value for e in ests], [e.reference for e in ests])
    claims = [Claim("exploratory", True, "iterated limit; recorded without gating", gating=False)]
    return _result(spec, res, t0, laws=book.values(), estimates=ests, claims=claims, ks_distance=dist,
                   extras={"label": label, "unit": unit})


def hard_shock_ladder(M_grid, ratio: float, lam: float, xi_grid, p: float, trials: int,
                      seed: int = 0, jobs: int = 1, guard: int = 10):
    """Fixed-M runs at t = ratio * M; the distance to the product law must fall along M."""
    runs = [run_hard_shock(lam, xi_grid, p, ratio * M, trials, M=M, seed=seed, jobs=jobs,
                           guard=guard, name=f"hard_shock_M{M}") for M in M_grid]
    d = [r.ks_distance for r in runs]
    mono = all(b < a for a, b in zip(d, d[1:]))
    return runs, Claim("distance decreasing in M", mono, "distances " + ", ".join(f"{x:.4f}" for x in d))


def run_tasep_transition(beta_grid, lam: float, xi, t: float, trials: int, seed: int = 0,
                         jobs: int = 1, allowance: float = 0.04, guard: int = 10,
                         name: str = "tasep_transition"):
    """TASEP shock between densities (1-beta)/2 and (1+beta)/2 in the transition scaling.

    Estimates P(x~_n(t) >= -xi w t^(1/3)), n = (1-beta)^2 t/4 + lam w t^(1/3),
    w = (1-beta)^(2/3)/2^(2/3), against the two-factor law at (xi w, lam w).
    """
    t0 = time.perf_counter()
    book = LawBook()
    xi_grid = _as_list(xi)
    spec = _spec(name, "tasep_transition", 1.0, t, trials, seed,
                 {"beta_grid": list(beta_grid), "lam": lam, "xi": xi_grid, "allowance": allowance},
                 observable="x~_n(t)", reference="nonhard_shock_law(xi w, lam w, beta)")
    ests, invalid, cl = [], [], []
    tt = t ** (1 / 3)
    for b in beta_grid:
        if math.floor(b * t) < 1:
            raise ValueError(f"beta t = {b * t} too small to form the block")
        w = transition_scale(b)
        label = round_label((1 - b) ** 2 * t / 4 + lam * w * tt, -math.floor(b * t))
        cfg = build(InitSpec("tasep_shock", {"beta": b, "t": t}), 1.0, horizon=t, guard=guard)
        res = _simulate([cfg], 1.0, seed, [t], [Watch(0, label)], trials, jobs, guard_margin=guard)
        x = res.samples[res.valid, -1, 0]
        row = [_prob(f"beta={_fmt(b)};xi={_fmt(v)}", np.count_nonzero(x >= -v * w * tt), x.size,
                     book.law("TasepTransition", lam=float(lam), beta=float(b))(v)) for v in xi_grid]
        ests.extend(row)
        invalid.append(res.invalid_fraction)
        cl.append(_distance_claim(f"beta={_fmt(b)}", row, allowance))
    out = _result(spec, None, t0, laws=book.values(), estimates=ests, claims=cl,
                  ks_distance=ks_distance([e.value for e in ests], [e.reference for e in ests]))
    out.invalid_fraction = max(invalid)
    return out


# -- Harris inequality ------------------------------------------------------
def covariance_ci(a: np.ndarray, b: np.ndarray):
    """P(A and B) - P(A)P(B) with its delta-method standard error."""
    a = a.astype(float)
    b = b.astype(float)
    n = a.size
    ma, mb = a.mean(), b.mean()
    d = (a * b).mean() - ma * mb
    psi = (a - ma) * (b - mb) - d
    se = psi.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return float(d), float(se)


def harris_claim(d: float, se: float) -> bool:
    """One-sided 95% lower bound d - 1.645 se stays above -3 se."""
    return d - Z_ONE_SIDED * se >= -3.0 * se


def run_harris(r1: int = -1, r2: int = -5, s1_grid=None, s2_grid=None, init: InitSpec = None,
               p: float = 0.75, t: float = 50.0, trials: int = 10000, seed: int = 0,
               jobs: int = 1, pilot: int = 2000, guard: int = 10, name: str = "harris"):
    """Positive correlation of {sigma_r1(t) >= s1} and {sigma_r2(t) >= s2}.

    ``r1, r2`` are initial sites of two particles.  Without explicit grids the
    thresholds are the quartiles of a pilot run on trials disjoint from the
    main ones.
    """
    t0 = time.perf_counter()
    if r1 == r2:
        raise ValueError("r = r' is excluded")
    init = init or InitSpec("step")
    cfg = build(init, p, horizon=max(t, 1.0), guard=guard)
    lab = dict(zip(cfg.particle_sites.tolist(), cfg.labels().tolist()))
    for r in (r1, r2):
        if r not in lab:
            raise ValueError(f"site {r} holds no particle initially")
    watches = [Watch(0, lab[r1]), Watch(0, lab[r2])]
    if t > 0:
        res = _simulate([cfg], p, seed, [t], watches, trials, jobs, guard_margin=guard)
    else:
        res = _static([cfg], watches, trials, [0.0])
    ok = res.valid
    X = res.samples[ok, -1, :]
    if s1_grid is None or s2_grid is None:
        if t > 0:
            spec_p = BatchSpec([cfg], float(p), int(seed), np.array([t]), watches, [], guard_margin=guard)
            pr = run_batch(spec_p, pilot, first=trials, jobs=jobs)
            Y = pr.samples[pr.valid, -1, :]
        else:
            Y = X
        q = lambda col: sorted(set(int(v) for v in np.quantile(Y[:, col], [0.25, 0.5, 0.75], method="lower")))
        s1_grid = s1_grid if s1_grid is not None else q(0)
        s2_grid = s2_grid if s2_grid is not None else q(1)
    spec = _spec(name, "harris", p, t, trials, seed,
                 {"r1": r1, "r2": r2, "s1_grid": list(map(int, s1_grid)),
                  "s2_grid": list(map(int, s2_grid)), "init": init.to_dict()},
                 observable="P(A and B) - P(A)P(B)", reference=">= 0")
    ests, worst, ok_all = [], math.inf, True
    for s1 in s1_grid:
        for s2 in s2_grid:
            a, b = X[:, 0] >= s1, X[:, 1] >= s2
            d, se = covariance_ci(a, b)
            ests.append(Estimate(f"s1={s1};s2={s2}", d, d - Z_ONE_SIDED * se, d + Z_ONE_SIDED * se,
                                 0.0, int(np.count_nonzero(a & b)), int(a.size)))
            ok_all &= harris_claim(d, se)
            worst = min(worst, d / se if se > 0 else (0.0 if d == 0 else math.copysign(math.inf, d)))
    claims = [Claim("positive correlation", ok_all, f"smallest d/se = {worst:.3f}")]
    return _result(spec, res, t0, estimates=ests, claims=claims)


# -- blocking measure -------------------------------------------------------
@dataclass(frozen=True)
class _BlockingFactory:
    """Per-trial blocking sample; a class so worker processes can unpickle it."""

    c: float
    p: float
    lo: int
    hi: int
    pad: int
    salt: int

    def __call__(self, k):
        seed = int(derive_seed(np.uint64(self.salt), np.int64(k)))
        return [sample_blocking(self.c, self.p, (self.lo, self.hi), seed=seed, pad=self.pad)]


def run_blocking_stationarity(c: float, p: float, t: float, trials: int, seed: int = 0,
                              jobs: int = 1, pad: int = 30, guard: int = 10, z_max: float = 4.0,
                              name: str = "blocking_stationarity"):
    """Evolve blocking samples to time ``t`` and test that the law did not move.

    Site marginals at time ``t`` are compared with the closed form through
    exact binomial tails, reported as equivalent normal z-scores (a normal
    approximation would misfire at far-tail sites where n pi << 1).  The
    leftmost-particle law at time ``t`` is compared with the empirical law of
    the same samples at time 0 (two-sample KS, zero at t = 0) and with the
    exact law P(x_0 <= j) = 1 - prod_{i <= j} (1 - pi_i).
    """
    t0 = time.perf_counter()
    if p >= 1.0:
        raise ValueError("the blocking measure needs q > 0 (p = 1 rejected)")
    spec = _spec(name, "blocking_stationarity", p, t, trials, seed, {"c": c, "pad": pad},
                 observable="site marginals and leftmost particle", reference="product Bernoulli law")
    lo, hi = blocking_window(c, p)
    salt = (int(seed) ^ _BLOCK_SALT) % 2**64
    factory = _BlockingFactory(c, p, lo, hi, pad, salt)
    start = np.stack([factory(k)[0].occupancy for k in range(trials)])
    if t > 0:
        bs = BatchSpec(factory(0), float(p), int(seed), np.array([float(t)]), [], [],
                       guard_margin=guard, keep_final=True, member_factory=factory)
        res = run_batch(bs, trials, jobs=jobs)
        final = res.final[res.valid]
        start = start[res.valid]
    else:
        res = None
        final = start
    n = final.shape[0]
    sites = np.arange(lo - pad, hi + pad + 1)
    pi = blocking_marginal(sites, c, p)
    counts = final.sum(axis=0).astype(np.int64)
    pval = np.minimum(1.0, 2 * np.minimum(stats.binom.cdf(counts, n, pi),
                                          stats.binom.sf(counts - 1, n, pi)))
    z = stats.norm.isf(pval / 2)
    emp = counts / n
    inner = (sites >= lo) & (sites <= hi)
    ests = []
    for s_, k, r in zip(sites[inner], counts[inner], pi[inner]):
        e = _prob(f"site={int(s_)}", int(k), n, float(r))
        ests.append(e)
    cdf_ref = 1.0 - np.cumprod(1.0 - pi)
    cdf_t, cdf_0 = _leftmost_cdf(final), _leftmost_cdf(start)
    ks = float(np.max(np.abs(cdf_t - cdf_0)))
    ks_exact = float(np.max(np.abs(cdf_t - cdf_ref)))
    band2 = dkw_bound(n) * math.sqrt(2.0)
    band = dkw_bound(n)
    zmax = float(np.max(z))
    claims = [Claim("site marginals", zmax <= z_max, f"max z-equivalent = {zmax:.3f} (limit {z_max})"),
              Claim("leftmost law, time 0 vs t", ks <= band2, f"KS {ks:.4f} vs two-sample band {band2:.4f}"),
              Claim("leftmost law, exact", ks_exact <= band, f"KS {ks_exact:.4f} vs DKW band {band:.4f}")]
    return _result(spec, res, t0, estimates=ests, claims=claims, ks_distance=ks,
                   extras={"max_z": zmax, "ks_exact": ks_exact, "dkw_band": band,
                           "two_sample_band": band2, "window": [int(lo), int(hi)],
                           "max_abs_marginal_gap": float(np.max(np.abs(emp - pi)))})


def _leftmost_cdf(occ: np.ndarray) -> np.ndarray:
    """Empirical P(leftmost particle index <= j) for each window index j."""
    first = np.where(occ.any(axis=1), occ.argmax(axis=1), occ.shape[1])
    hist = np.bincount(first, minlength=occ.shape[1] + 1)[: occ.shape[1]]
    return np.cumsum(hist) / occ.shape[0]


def run_leftmost_tail(Z: int, p: float, t: float, R_grid, trials: int, use_inf: bool = False,
                      seed: int = 0, jobs: int = 1, delta: float = DELTA_DEFAULT, guard: int = 10,
                      min_r2: float = 0.9, name: str = "leftmost_tail"):
    """Tail of the leftmost particle of reversed-step data started at ``Z``.

    Estimates P(x_0(t) < Z - R) (or its running-inf version) and fits log
    probability against R, weighting each point by its hit count.  The claim
    is an exponential tail: negative slope with R^2 above ``min_r2``.  With
    ``use_inf`` the extra point R = t^delta is reported.
    """
    t0 = time.perf_counter()
    spec = _spec(name, "leftmost_tail", p, t, trials, seed,
                 {"Z": Z, "R_grid": list(R_grid), "use_inf": use_inf, "min_r2": min_r2},
                 {"delta": delta} if use_inf else {},
                 observable="leftmost particle" + (" running inf" if use_inf else ""),
                 reference="C1 exp(-C2 R)")
    cfg = build(InitSpec("reversed_step", {"Z": Z}), p, horizon=t, guard=guard)
    res = _simulate([cfg], p, seed, [t], [Watch(0, 0)], trials, jobs, guard_margin=guard)
    ok = res.valid
    x = res.running_min[ok, 0] if use_inf else res.samples[ok, -1, 0]
    ests = [_prob(f"R={R}", np.count_nonzero(x < Z - R), x.size) for R in R_grid]
    if use_inf:
        R = t ** delta
        ests.append(_prob(f"R=t^delta={R:.4f}", np.count_nonzero(x < Z - R), x.size))
    pts = [(R, e) for R, e in zip(R_grid, ests) if e.successes > 0]
    extras = {"fit_points": len(pts)}
    if len(pts) >= 3:
        Rs = [R for R, _ in pts]
        a, b, r2 = linear_fit(Rs, [math.log(e.value) for _, e in pts], [e.successes for _, e in pts])
        extras.update(intercept=a, slope=b, r2=r2)
        claim = Claim("exponential tail", b < 0 and r2 > min_r2, f"slope {b:.4f}, R^2 {r2:.4f}")
    else:
        claim = Claim("exponential tail", False, "fewer than three R values with hits")
    return _result(spec, res, t0, estimates=ests, claims=[claim], extras=extras)


# -- mixing -----------------------------------------------------------------
def run_mixing(a, b, N_grid, p: float, trials: int, seed: int = 0, jobs: int = 1,
               horizon: Optional[float] = None, margin: int = 40, guard: int = 10,
               max_curvature: float = 0.10, name: str = "mixing"):
    """Hitting time of the maximal (reversed step) state from 1_{a..b} + 1_{>= N+1}.

    ``a`` and ``b`` are integers or sequences aligned with ``N_grid``.  The
    claim: mean hitting time is linear in M = max(b-a+1, N-b), i.e. positive
    slope and a quadratic term below ``max_curvature`` of the linear one at
    the largest M.
    """
    t0 = time.perf_counter()
    n = len(N_grid)
    A = list(a) if isinstance(a, (list, tuple)) else [a] * n
    B = list(b) if isinstance(b, (list, tuple)) else [b] * n
    spec = _spec(name, "mixing", p, 0.0 if horizon is None else horizon, trials, seed,
                 {"a": A, "b": B, "N_grid": list(N_grid), "margin": margin, "horizon": horizon},
                 observable="hitting time of the maximal state", reference="linear in M")
    ests, Ms, means, ses, invalid, quant = [], [], [], [], [], []
    d = 2 * float(exact(p)) - 1
    for ai, bi, N in zip(A, B, N_grid):
        M = max(bi - ai + 1, N - bi)
        H = horizon if horizon is not None else 60.0 * max(M, 1) / d + 200.0
        init = InitSpec("eta_abn", {"a": ai, "b": bi, "N": N})
        cfg = build(init, p, window=(min(ai, N + 1) - 1 - margin - guard, N + 1 + margin + guard))
        Z = omega_index(cfg)
        sites = np.arange(cfg.window_lo, cfg.window_hi + 1)
        target = cfg.with_occupancy(sites >= Z)
        if np.array_equal(cfg.occupancy, target.occupancy):
            h = np.zeros(trials)
            inv = 0.0
        else:
            res = _simulate([cfg], p, seed, [H], [], trials, jobs, guard_margin=guard, target=target)
            inv = res.invalid_fraction
            h = res.hit_time[res.valid]
            if np.any(~np.isfinite(h)):
                inv = max(inv, float(np.mean(~np.isfinite(h))))
                h = h[np.isfinite(h)]
        invalid.append(inv)
        m = float(np.mean(h))
        se = float(np.std(h, ddof=1) / math.sqrt(h.size)) if h.size > 1 else 0.0
        ests.append(Estimate(f"M={M};a={ai};b={bi};N={N}", m, m - Z95 * se, m + Z95 * se,
                             None, 0, int(h.size)))
        quant.append([float(v) for v in np.quantile(h, [0.1, 0.5, 0.9])])
        Ms.append(M)
        means.append(m)
        ses.append(se)
    extras = {"M": Ms, "mean": means, "se": ses, "quantiles_10_50_90": quant}
    claims = []
    if len(set(Ms)) >= 3:
        x = np.asarray(Ms, float)
        y = np.asarray(means)
        se = np.asarray(ses)
        # a packed start has se = 0; floor it so the fit stays conditioned
        w = 1 / np.maximum(se, max(1e-3 * se.max(), 1e-12)) ** 2
        c2, c1, c0 = np.polyfit(x, y, 2, w=np.sqrt(w))
        a0, b1, r2 = linear_fit(x, y, w)
        curv = abs(c2) * x.max() / abs(c1) if c1 != 0 else math.inf
        extras.update(slope=b1, intercept=a0, r2=r2, quad=float(c2), lin=float(c1), curvature=curv)
        claims.append(Claim("linear growth", b1 > 0 and curv < max_curvature,
                            f"slope {b1:.4f}, relative curvature {curv:.4f}"))
    out = _result(spec, None, t0, estimates=ests, claims=claims, extras=extras)
    out.invalid_fraction = max(invalid) if invalid else 0.0
    if out.flagged:
        out.claims.append(Claim("invalid_fraction", False, f"invalid fraction {out.invalid_fraction:.4f}"))
    return out


# -- slow decorrelation and independence ------------------------------------
def run_slow_decorrelation(M: int, p: float, t_grid, kappa: float = KAPPA_DEFAULT, eps: float = 0.5,
                           trials: int = 1000, C: Optional[float] = None, seed: int = 0,
                           jobs: int = 1, guard: int = 10, name: str = "slow_decorrelation"):
    """P(|x^A_M(t) - x^A_M(t - t^kappa) - (p-q) t^kappa| >= eps t^(1/2)) along ``t_grid``."""
    t0 = time.perf_counter()
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    spec = _spec(name, "slow_decorrelation", p, max(t_grid), trials, seed,
                 {"M": M, "t_grid": list(t_grid), "eps": eps, "C": C}, {"kappa": kappa},
                 observable="increment of x^A_M over [t - t^kappa, t]", reference="-> 0")
    d = 2 * float(exact(p)) - 1
    ests, invalid = [], []
    for t in t_grid:
        par = {"t": t, "M": M} if C is None else {"t": t, "C": C}
        cfg = build(InitSpec("a_data", par), p, horizon=t, guard=guard)
        tk = t ** kappa
        res = _simulate([cfg], p, seed, [t - tk, t], [Watch(0, M)], trials, jobs, guard_margin=guard)
        S = res.samples[res.valid, :, 0]
        inc = S[:, 1] - S[:, 0] - d * tk
        ests.append(_prob(f"t={_fmt(t)}", np.count_nonzero(np.abs(inc) >= eps * math.sqrt(t)), inc.size, 0.0))
        invalid.append(res.invalid_fraction)
    vals = [e.value for e in ests]
    mono = all(b <= a for a, b in zip(vals, vals[1:]))
    out = _result(spec, None, t0, estimates=ests,
                  claims=[Claim("decreasing in t", mono, ", ".join(f"{v:.4f}" for v in vals))])
    out.invalid_fraction = max(invalid)
    return out


def run_independence(M: int, p: float, t: float, kappa: float = KAPPA_DEFAULT, C: Optional[float] = None,
                     C_tilde: float = 0.0, R_grid=(0,), trials: int = 1000, seed: int = 0,
                     jobs: int = 1, allowance: float = ALLOWANCE, guard: int = 10,
                     name: str = "independence"):
    """P(min{x^A_M(t - t^kappa) + (p-q)(t^kappa + C~ t^(1/2)), x^B_M(t)} >= -R)
    under the coupling of the A and B data, against the two-branch law."""
    t0 = time.perf_counter()
    book = LawBook()
    if not 0.5 < kappa < 1:
        raise ValueError("kappa must lie in (1/2, 1)")
    Cval = shift_c(M, p) if C is None else float(C)
    spec = _spec(name, "independence", p, t, trials, seed,
                 {"M": M, "C": C, "C_tilde": C_tilde, "R_grid": list(R_grid), "allowance": allowance},
                 {"kappa": kappa}, observable="min of shifted x^A_M and x^B_M",
                 reference="F_{M,p}(C+C~) [* F_{M-R,p}(C) for R < M]")
    par = {"t": t, "M": M} if C is None else {"t": t, "C": C}
    specs = [InitSpec("a_data", par), InitSpec("b_data", par)]
    w = _union_window(specs, p, t, guard)
    members = [build(s, p, window=w) for s in specs]
    d = 2 * float(exact(p)) - 1
    tk = t ** kappa
    res = _simulate(members, p, seed, [t - tk, t], [Watch(0, M), Watch(1, M)], trials, jobs,
                    pairs=[(0, 1)], guard_margin=guard)
    ok = res.valid
    first = res.samples[ok, 0, 0] + d * (tk + C_tilde * math.sqrt(t))
    second = res.samples[ok, 1, 1]
    z = np.minimum(first, second)
    ests, prods = [], {}
    for R in R_grid:
        ref = book.step(M, p, Cval + C_tilde) * (1.0 if R >= M else book.step(M - R, p, Cval))
        ests.append(_prob(f"R={R}", np.count_nonzero(z >= -R), z.size, ref))
        pa, pb = np.mean(first >= -R), np.mean(second >= -R)
        prods[str(R)] = {"joint": ests[-1].value, "product_of_marginals": float(pa * pb),
                         "difference": float(ests[-1].value - pa * pb)}
    claims = [_distance_claim("two-factor law", ests, allowance)]
    return _result(spec, res, t0, laws=book.values(), estimates=ests, claims=claims, extras={"C": Cval, "marginals": prods},
                   ks_distance=ks_distance([e.value for e in ests], [e.reference for e in ests]))


# -- dispatch ---------------------------------------------------------------
def execute(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Run an :class:`ExperimentSpec`; ``params`` are passed as keyword arguments."""
    P = dict(spec.params)
    sc = spec.scalings
    common = dict(seed=spec.seed, jobs=jobs, name=spec.name)
    p, t, n = spec.p, spec.t, spec.trials
    op = spec.op
    if op == "step_law":
        return run_step_law(P.pop("M", 1), p, t, n, **P, **common)
    if op == "discrete_shock":
        return run_discrete_shock(P.pop("M"), P.pop("R_grid"), p, t, trials=n, **P, **common)
    if op == "cutoff":
        return run_cutoff(P.pop("M"), p, t, trials=n, **P, **common)
    if op == "hard_shock":
        P.pop("mode", None)
        return run_hard_shock(P.pop("lam", 0.0), P.pop("xi_grid"), p, t, n, nu=sc.get("nu"),
                              exploratory=spec.exploratory, **P, **common)
    if op == "tasep_transition":
        return run_tasep_transition(P.pop("beta_grid"), P.pop("lam", 0.0), P.pop("xi"), t, n, **P, **common)
    if op == "harris":
        if "init" in P and isinstance(P["init"], dict):
            P["init"] = InitSpec.from_dict(P["init"])
        return run_harris(p=p, t=t, trials=n, **P, **common)
    if op == "blocking_stationarity":
        return run_blocking_stationarity(P.pop("c", 1.0), p, t, n, **P, **common)
    if op == "leftmost_tail":
        if "delta" in sc:
            P["delta"] = sc["delta"]
        return run_leftmost_tail(P.pop("Z", 0), p, t, P.pop("R_grid"), n, **P, **common)
    if op == "mixing":
        return run_mixing(P.pop("a"), P.pop("b"), P.pop("N_grid"), p, n, **P, **common)
    if op == "slow_decorrelation":
        return run_slow_decorrelation(P.pop("M"), p, P.pop("t_grid"), kappa=sc.get("kappa", KAPPA_DEFAULT),
                                      trials=n, **P, **common)
    if op == "independence":
        return run_independence(P.pop("M"), p, t, kappa=sc.get("kappa", KAPPA_DEFAULT), trials=n,
                                **P, **common)
    raise SpecError("op", f"unknown operation {op!r}")
