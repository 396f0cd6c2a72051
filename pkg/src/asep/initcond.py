"""Initial configurations and the blocking-measure sampler."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .lattice import EMPTY, FULL, Configuration

KINDS = (
    "step", "reversed_step", "shock_ic", "shock_ic2", "a_data", "b_data",
    "d_data", "eta_abn", "tasep_shock", "blocking",
)

_FLOOR_DPS = 60


def exact(x) -> Fraction:
    """Rational value of ``x``; decimal literals are read exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def shift_c(M: int, p) -> float:
    """The shift constant 2 sqrt(M / (p - q)) that centres particle M at the origin."""
    d = 2 * exact(p) - 1
    return 2.0 * math.sqrt(M / float(d))


def _floor(x: mpmath.mpf) -> int:
    n = int(mpmath.floor(x))
    # values landing within rounding noise of an integer are snapped
    if abs(x - (n + 1)) < mpmath.mpf(10) ** (-_FLOOR_DPS + 10):
        n += 1
    return n


def block_length(p, t, C=None, M: Optional[int] = None) -> int:
    """floor((p - q)(t - C t^(1/2))), with C = 2 sqrt(M/(p-q)) when M is given."""
    d = 2 * exact(p) - 1
    t = exact(t)
    with mpmath.workdps(_FLOOR_DPS):
        dd = mpmath.mpf(d.numerator) / d.denominator
        tt = mpmath.mpf(t.numerator) / t.denominator
        if M is not None:
            val = dd * tt - 2 * mpmath.sqrt(M * dd * tt)
        else:
            c = exact(0 if C is None else C)
            val = dd * (tt - mpmath.mpf(c.numerator) / c.denominator * mpmath.sqrt(tt))
        return _floor(val)


def ic2_length(t, nu) -> int:
    """floor(t - 2 t^(nu/2 + 1/2))."""
    t, nu = exact(t), exact(nu)
    with mpmath.workdps(_FLOOR_DPS):
        tt = mpmath.mpf(t.numerator) / t.denominator
        e = mpmath.mpf(nu.numerator) / nu.denominator / 2 + mpmath.mpf(1) / 2
        return _floor(tt - 2 * tt ** e)


def tasep_block(beta, t) -> int:
    b, t = exact(beta), exact(t)
    return math.floor(b * t)


@dataclass(frozen=True)
class InitSpec:
    """Declarative initial data.

    ``params`` keys by kind: reversed_step ``Z``; shock_ic/a_data/b_data/d_data
    ``t`` and either ``C`` or ``M`` (for the centring constant); shock_ic2
    ``t, nu``; eta_abn ``a, b, N``; tasep_shock ``beta, t``; blocking ``c``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial-data kind {self.kind!r}")
        P = self.params
        need = {
            "reversed_step": ("Z",), "shock_ic": ("t",), "a_data": ("t",), "b_data": ("t",),
            "d_data": ("t",), "shock_ic2": ("t", "nu"), "eta_abn": ("a", "b", "N"),
            "tasep_shock": ("beta", "t"),
        }.get(self.kind, ())
        for k in need:
            if k not in P:
                raise ValueError(f"{self.kind} needs parameter {k!r}")
        if "t" in P and not P["t"] > 0:
            raise ValueError("t must be positive")
        if "nu" in P and not 0 < P["nu"] < 1:
            raise ValueError("nu must lie in (0, 1)")
        if "beta" in P and not 0 < P["beta"] < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.kind == "eta_abn" and not P["a"] <= P["b"] <= P["N"]:
            raise ValueError("need a <= b <= N")
        if self.kind == "blocking" and not P.get("c", 1.0) > 0:
            raise ValueError("c must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "InitSpec":
        return cls(d["kind"], dict(d.get("params", {})))


def shock_length(spec: InitSpec, p) -> int:
    """Number of holes separating the finite block from the infinite part."""
    P = spec.params
    if spec.kind in ("shock_ic", "a_data", "b_data", "d_data"):
        return block_length(p, P["t"], P.get("C"), P.get("M"))
    if spec.kind == "shock_ic2":
        return ic2_length(P["t"], P["nu"])
    if spec.kind == "tasep_shock":
        return tasep_block(P["beta"], P["t"])
    raise ValueError(f"{spec.kind} has no block length")


def support(spec: InitSpec, p) -> tuple[int, int]:
    """Interval holding every site that differs from the fill conventions."""
    P = spec.params
    k = spec.kind
    if k == "step":
        return -1, 0
    if k == "reversed_step":
        return P["Z"] - 1, P["Z"]
    if k == "eta_abn":
        return min(P["a"], P["N"] + 1) - 1, P["N"] + 1
    if k == "blocking":
        raise ValueError("blocking samples take an explicit window")
    L = shock_length(spec, p)
    if k == "a_data":
        return -1 - L, -L
    if k == "b_data":
        return L, L + 1
    return -max(L, 1), max(L, 1)


def default_window(spec: InitSpec, p, horizon: float, guard: int = 10) -> tuple[int, int]:
    """Light-cone window: half-width ceil((p-q)T + 6 sqrt(T) + guard) around the support."""
    lo, hi = support(spec, p)
    w = math.ceil(float(2 * exact(p) - 1) * horizon + 6.0 * math.sqrt(horizon) + guard)
    return lo - w, hi + w


def build(spec: InitSpec, p, window: Optional[tuple[int, int]] = None,
          horizon: Optional[float] = None, guard: int = 10) -> Configuration:
    if window is None:
        if horizon is None:
            raise ValueError("give a window or a horizon")
        window = default_window(spec, p, horizon, guard)
    lo, hi = window
    slo, shi = support(spec, p) if spec.kind != "blocking" else (lo, hi)
    if slo < lo or shi > hi:
        raise ValueError(f"window [{lo}, {hi}] too small for support [{slo}, {shi}]")
    k, P = spec.kind, spec.params
    sites = np.arange(lo, hi + 1)

    if k == "step":
        return Configuration(lo, hi, sites <= -1, FULL, EMPTY, anchor_label=1)
    if k == "reversed_step":
        Z = P["Z"]
        return Configuration(lo, hi, sites >= Z, EMPTY, FULL, anchor_label=0)
    if k == "eta_abn":
        a, b, N = P["a"], P["b"], P["N"]
        occ = ((sites >= a) & (sites <= b)) | (sites >= N + 1)
        return Configuration(lo, hi, occ, EMPTY, FULL, anchor_label=0)
    if k == "blocking":
        raise ValueError("use sample_blocking for blocking configurations")

    L = shock_length(spec, p)
    if k in ("shock_ic", "shock_ic2", "tasep_shock"):
        # labels -L..0 on sites 0..L, then x_n = -n - L for n >= 1
        occ = ((sites >= 0) & (sites <= L)) | (sites <= -1 - L)
        return Configuration(lo, hi, occ, FULL, EMPTY, anchor_label=-L)
    if k == "a_data":
        return Configuration(lo, hi, sites <= -1 - L, FULL, EMPTY, anchor_label=1)
    if k == "b_data":
        # holes H_n = n + L counted from the left
        return Configuration(lo, hi, sites <= L, FULL, EMPTY, anchor_label=-L, hole_anchor=1)
    if k == "d_data":
        occ = (sites >= 0) & (sites <= L)
        return Configuration(lo, hi, occ, EMPTY, EMPTY, anchor_label=-L, hole_origin=0)
    raise AssertionError(k)


# -- blocking measure -------------------------------------------------------
def blocking_marginal(i, c: float, p) -> np.ndarray:
    """Occupation probability c r^i / (1 + c r^i), r = p/q, evaluated without overflow."""
    p = float(p)
    if p >= 1.0:
        raise ValueError("blocking measure needs q > 0 (p = 1 is degenerate)")
    lr = math.log(p / (1.0 - p))
    z = math.log(c) + lr * np.asarray(i, dtype=float)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def blocking_window(c: float, p, tail: float = 1e-12) -> tuple[int, int]:
    """Smallest window outside which the measure deviates from its fills with prob < tail.

    The sum over i < lo of c r^i and the sum over i > hi of r^-i / c are
    geometric, so both tails are bounded in closed form.
    """
    p = float(p)
    if p >= 1.0:
        raise ValueError("blocking measure needs q > 0 (p = 1 is degenerate)")
    r = p / (1.0 - p)
    g = 1.0 / (1.0 - 1.0 / r)
    # left: sum_{i<lo} c r^i = c r^(lo-1) g < tail/2
    lo = math.floor(math.log(tail / (2 * c * g)) / math.log(r)) + 1
    while c * r ** (lo - 1) * g >= tail / 2:
        lo -= 1
    # right: sum_{i>hi} r^-i / c = r^-(hi+1) g / c < tail/2
    hi = math.ceil(-math.log(tail * c / (2 * g)) / math.log(r)) - 1
    while r ** -(hi + 1) * g / c >= tail / 2:
        hi += 1
    return lo, hi


def blocking_tail_bound(c: float, p, window: tuple[int, int]) -> float:
    r = float(p) / (1.0 - float(p))
    g = 1.0 / (1.0 - 1.0 / r)
    lo, hi = window
    return c * r ** (lo - 1) * g + r ** -(hi + 1) * g / c


def sample_blocking(c: float, p, window: Optional[tuple[int, int]] = None, seed: int = 0,
                    pad: int = 0) -> Configuration:
    """Product Bernoulli sample of the blocking measure.

    ``window`` must satisfy the 1e-12 tail condition; ``pad`` extra sites on
    each side leave room for the dynamics.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    need = blocking_window(c, p)
    if window is None:
        window = need
    elif blocking_tail_bound(c, p, window) >= 1e-12:
        raise ValueError(f"window {window} too small; need at least {need}")
    lo, hi = window
    rng = np.random.default_rng(seed)
    probs = blocking_marginal(np.arange(lo, hi + 1), c, p)
    occ = (rng.random(probs.size) < probs).astype(np.uint8)
    occ = np.r_[np.zeros(pad, np.uint8), occ, np.ones(pad, np.uint8)]
    return Configuration(lo - pad, hi + pad, occ, EMPTY, FULL, anchor_label=0)
