"""Finite-window configurations with particle and hole labels.

Sites outside ``[window_lo, window_hi]`` are deterministic: all empty or all
full on each side.  Particle labels decrease from left to right (label
``n + 1`` sits left of label ``n``).  With an empty right side labels are
anchored at the rightmost particle, otherwise at the leftmost one.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

EMPTY = "empty"
FULL = "full"

POINTWISE_LE = "pointwise_le"
PRECEQ = "preceq"


@dataclass
class Configuration:
    window_lo: int
    window_hi: int
    occupancy: np.ndarray
    left_fill: str = FULL
    right_fill: str = EMPTY
    anchor_label: int = 1
    hole_anchor: int = 1
    hole_origin: Optional[int] = None
    _particles: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=np.uint8)
        if self.window_hi < self.window_lo:
            raise ValueError("empty window")
        if self.occupancy.shape != (self.window_hi - self.window_lo + 1,):
            raise ValueError("occupancy length does not match the window")
        if self.left_fill not in (EMPTY, FULL) or self.right_fill not in (EMPTY, FULL):
            raise ValueError("fills must be 'empty' or 'full'")
        if np.any(self.occupancy > 1):
            raise ValueError("at most one particle per site")

    @classmethod
    def from_particles(cls, lo, hi, sites, **kw) -> "Configuration":
        occ = np.zeros(hi - lo + 1, dtype=np.uint8)
        sites = np.asarray(list(sites), dtype=np.int64)
        if sites.size:
            if sites.min() < lo or sites.max() > hi:
                raise ValueError("particle outside window")
            occ[sites - lo] = 1
        return cls(lo, hi, occ, **kw)

    # -- derived views -----------------------------------------------------
    @property
    def size(self) -> int:
        return self.occupancy.shape[0]

    @property
    def particle_sites(self) -> np.ndarray:
        """In-window particle sites, increasing."""
        if self._particles is None:
            self._particles = np.flatnonzero(self.occupancy) + self.window_lo
        return self._particles

    @property
    def particle_positions(self) -> np.ndarray:
        """In-window particle sites ordered by increasing label."""
        s = self.particle_sites
        return s[::-1].copy() if self.right_fill == EMPTY else s.copy()

    @property
    def hole_positions(self) -> np.ndarray:
        return np.flatnonzero(self.occupancy == 0) + self.window_lo

    def occupied(self, site: int) -> int:
        if site < self.window_lo:
            return int(self.left_fill == FULL)
        if site > self.window_hi:
            return int(self.right_fill == FULL)
        return int(self.occupancy[site - self.window_lo])

    def copy(self) -> "Configuration":
        return replace(self, occupancy=self.occupancy.copy(), _particles=None)

    def with_occupancy(self, occ) -> "Configuration":
        return replace(self, occupancy=np.asarray(occ, dtype=np.uint8).copy(), _particles=None)

    def rewindow(self, lo: int, hi: int) -> "Configuration":
        """Same configuration represented on ``[lo, hi]``."""
        if lo > self.window_lo or hi < self.window_hi:
            inner = self.occupancy
            cut_lo = max(lo, self.window_lo)
            cut_hi = min(hi, self.window_hi)
            left_out = inner[: max(0, cut_lo - self.window_lo)]
            right_out = inner[max(0, cut_hi - self.window_lo + 1):]
            if np.any(left_out != (self.left_fill == FULL)) or np.any(right_out != (self.right_fill == FULL)):
                raise ValueError("window too small: shrinking would drop discrepant sites")
        occ = np.array([self.occupied(s) for s in range(lo, hi + 1)], dtype=np.uint8)
        return replace(self, window_lo=lo, window_hi=hi, occupancy=occ, _particles=None)

    def labels(self) -> np.ndarray:
        """Labels of the in-window particles, aligned with ``particle_sites``."""
        n = self.particle_sites.size
        if self.right_fill == EMPTY:
            return self.anchor_label + np.arange(n)[::-1]
        if self.left_fill == EMPTY:
            return self.anchor_label - np.arange(n)
        raise ValueError("configurations full on both sides carry no particle labels")


def _count_label(config: Configuration, label: int) -> int:
    if config.right_fill == EMPTY:
        k = label - config.anchor_label + 1
    elif config.left_fill == EMPTY:
        k = config.anchor_label - label + 1
    else:
        raise ValueError("configurations full on both sides carry no particle labels")
    if k < 1:
        raise KeyError(f"unknown label {label}")
    return k


def position(config: Configuration, label: int) -> int:
    """Site of the particle carrying ``label``."""
    k = _count_label(config, label)
    sites = config.particle_sites
    c = sites.size
    if config.right_fill == EMPTY:
        if k <= c:
            return int(sites[c - k])
        if config.left_fill == FULL:
            return config.window_lo - (k - c)
    else:
        if k <= c:
            return int(sites[k - 1])
        return config.window_hi + (k - c)
    raise KeyError(f"unknown label {label}")


def round_label(x: float, smallest: int) -> int:
    """Integer label nearest to a fractional one such as ``M + lam M^(1/3)``."""
    n = int(math.floor(x + 0.5))
    if n < smallest:
        raise ValueError(f"label {x} rounds to {n}, below the smallest label {smallest}")
    return n


def hole_position(config: Configuration, n: int) -> int:
    """Site of hole ``n``.

    Holes run left to right from the first hole when the left side is full,
    leftwards from the last hole when only the right side is full, and
    rightwards from ``hole_origin`` otherwise.
    """
    k = n - config.hole_anchor + 1
    if k < 1:
        raise KeyError(f"hole index {n} below the first hole label")
    holes = config.hole_positions
    if config.left_fill == FULL:
        if k <= holes.size:
            return int(holes[k - 1])
        if config.right_fill == EMPTY:
            return config.window_hi + (k - holes.size)
        raise IndexError(f"hole {n} does not exist")
    if config.right_fill == FULL:
        if k <= holes.size:
            return int(holes[holes.size - k])
        return config.window_lo - (k - holes.size)
    origin = config.window_lo if config.hole_origin is None else config.hole_origin
    if origin < config.window_lo or origin > config.window_hi:
        raise IndexError("hole origin outside the window")
    right = holes[holes >= origin]
    if k <= right.size:
        return int(right[k - 1])
    return config.window_hi + (k - right.size)


def leftmost_particle(config: Configuration) -> int:
    if config.left_fill == FULL:
        raise ValueError("no leftmost particle: infinitely many particles to the left")
    sites = config.particle_sites
    if sites.size:
        return int(sites[0])
    if config.right_fill == FULL:
        return config.window_hi + 1
    raise ValueError("configuration has no particles")


def omega_index(config: Configuration) -> int:
    """The ``Z`` with ``config`` in Omega_Z (particles left of Z = holes right of it)."""
    if config.left_fill != EMPTY or config.right_fill != FULL:
        raise ValueError("Omega_Z needs an empty left side and a full right side")
    occ = config.occupancy.astype(np.int64)
    lo = config.window_lo
    # particles in [lo, z-1] minus holes in [z, hi] increases by one per site
    left = np.r_[0, np.cumsum(occ)]
    holes_right = np.r_[np.cumsum((1 - occ)[::-1])[::-1], 0]
    diff = left - holes_right
    idx = np.flatnonzero(diff == 0)
    if idx.size != 1:
        raise ValueError("configuration has no Omega_Z representation in its window")
    return lo + int(idx[0])


@dataclass(frozen=True)
class OrderWitness:
    kind: str
    lhs: Configuration
    rhs: Configuration
    fails_at: Optional[int] = None

    @property
    def holds(self) -> bool:
        return self.fails_at is None


def _common(a: Configuration, b: Configuration):
    lo = min(a.window_lo, b.window_lo)
    hi = max(a.window_hi, b.window_hi)
    return lo, hi, a.rewindow(lo, hi).occupancy, b.rewindow(lo, hi).occupancy


def compare(a: Configuration, b: Configuration, kind: str = POINTWISE_LE) -> OrderWitness:
    """Decide ``a <= b`` pointwise or ``a preceq b`` (hole tail counts)."""
    if kind == POINTWISE_LE:
        lo, hi, oa, ob = _common(a, b)
        if a.left_fill == FULL and b.left_fill == EMPTY:
            return OrderWitness(kind, a, b, lo - 1)
        if a.right_fill == FULL and b.right_fill == EMPTY:
            return OrderWitness(kind, a, b, hi + 1)
        bad = np.flatnonzero(oa > ob)
        return OrderWitness(kind, a, b, None if bad.size == 0 else lo + int(bad[0]))
    if kind == PRECEQ:
        for c in (a, b):
            if c.right_fill != FULL or c.left_fill != EMPTY:
                raise ValueError("preceq is defined on Omega_Z: empty left side, full right side")
        lo, hi, oa, ob = _common(a, b)
        tail_a = np.cumsum((1 - oa.astype(np.int64))[::-1])[::-1]
        tail_b = np.cumsum((1 - ob.astype(np.int64))[::-1])[::-1]
        bad = np.flatnonzero(tail_b > tail_a)
        return OrderWitness(kind, a, b, None if bad.size == 0 else lo + int(bad[-1]))
    raise ValueError(f"unknown order kind {kind!r}")


def y_min(config_a: Configuration, config_b: Configuration, label: int) -> int:
    return min(position(config_a, label), position(config_b, label))


# -- debug dump -------------------------------------------------------------
def dump(config: Configuration) -> str:
    """One line per site: ``site occupancy [label]``, after a header line."""
    out = io.StringIO()
    out.write(
        f"# lo={config.window_lo} hi={config.window_hi} left_fill={config.left_fill} "
        f"right_fill={config.right_fill} anchor_label={config.anchor_label} "
        f"hole_anchor={config.hole_anchor} hole_origin={config.hole_origin}\n"
    )
    try:
        labels = dict(zip(config.particle_sites.tolist(), config.labels().tolist()))
    except ValueError:
        labels = {}
    for i, o in enumerate(config.occupancy.tolist()):
        site = config.window_lo + i
        if o and site in labels:
            out.write(f"{site} 1 {labels[site]}\n")
        else:
            out.write(f"{site} {o}\n")
    return out.getvalue()


def parse(text: str) -> Configuration:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split())
    occ = [int(ln.split()[1]) for ln in lines[1:]]
    origin = None if head["hole_origin"] == "None" else int(head["hole_origin"])
    cfg = Configuration(int(head["lo"]), int(head["hi"]), np.array(occ, dtype=np.uint8),
                        head["left_fill"], head["right_fill"], int(head["anchor_label"]),
                        int(head["hole_anchor"]), origin)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) == 3 and position(cfg, int(parts[2])) != int(parts[0]):
            raise ValueError(f"label {parts[2]} inconsistent with occupancy at {parts[0]}")
    return cfg
