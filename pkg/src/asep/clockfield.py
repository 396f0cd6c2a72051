"""Seed-keyed Poisson clocks for the graphical construction.

Every bond direction ``(site, direction)`` owns a Poisson process of rate
``p`` (Right, the clock P^{i,i+1}) or ``q = 1 - p`` (Left, P^{i,i-1}).  Time
is cut into blocks of width ``BLOCK_RINGS / rate``.  Block ``b`` of a stream
holds a Poisson(``BLOCK_RINGS``) number of rings placed at independent
uniform positions; the count and the positions are hashes of
``(master_seed, site, direction, b, j)``.  Any stream can therefore be
entered at an arbitrary time without replaying its history, and every
process coupled to the same field sees exactly the same rings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

RIGHT = 0
LEFT = 1

BLOCK_RINGS = 1.0
_EXP_NEG = math.exp(-BLOCK_RINGS)
_MAX_RINGS = 400

_U64 = np.uint64
_SITE_OFFSET = np.int64(1 << 62)
_K_SITE = _U64(0x9E3779B97F4A7C15)
_K_BLOCK = _U64(0xD1B54A32D192ED03)
_K_GAP = _U64(0xAEF17502108EF2D9)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def mix64(z):
    z = _U64(z)
    z = z ^ (z >> _U64(30))
    z = z * _M1
    z = z ^ (z >> _U64(27))
    z = z * _M2
    return z ^ (z >> _U64(31))


@njit(cache=True)
def stream_key(seed, site, direction):
    """Hash of (seed, site, direction); the per-stream root key."""
    s = _U64(np.int64(site) + _SITE_OFFSET)
    h = mix64(_U64(seed) ^ mix64(s * _K_SITE + _U64(direction)))
    return mix64(h + _K_SITE)


@njit(cache=True, inline="always")
def block_key(skey, block):
    return mix64(_U64(skey) ^ (_U64(block + 1) * _K_BLOCK))


@njit(cache=True, inline="always")
def gap_uniform(bkey, j):
    h = mix64(_U64(bkey) + _U64(j + 1) * _K_GAP)
    return ((h >> _U64(11)) + 0.5) * _INV53


@njit(cache=True)
def derive_seed(master_seed, index):
    """Independent per-trial seed from (master_seed, trial index)."""
    return mix64(mix64(_U64(master_seed) + _K_GAP) ^ (_U64(index) * _K_SITE + _U64(1)))


@njit(cache=True, inline="always")
def block_count(bkey):
    """Poisson(BLOCK_RINGS) ring count of a block, by inversion."""
    u = gap_uniform(bkey, -1)
    k = 0
    pmf = _EXP_NEG
    cdf = pmf
    while u > cdf and k < _MAX_RINGS:
        k += 1
        pmf *= BLOCK_RINGS / k
        cdf += pmf
    return k


@njit(cache=True)
def block_rings(skey, block, rate, out):
    """Write the sorted rings of one block into ``out``; return their count."""
    if rate <= 0.0:
        return 0
    width = BLOCK_RINGS / rate
    bkey = block_key(skey, block)
    n = block_count(bkey)
    if n > out.shape[0]:
        return -1
    start = block * width
    for i in range(n):
        out[i] = start + width * gap_uniform(bkey, i)
    out[:n].sort()
    return n


@njit(cache=True)
def advance(skey, rate, block, j, cur, after, horizon):
    """Smallest ring strictly greater than ``after`` from cursor state.

    The cursor ``(block, j, cur)`` sits on ring ``cur`` of ``block`` (the
    ``j``-th uniform drawn for it) or, when ``j == 0``, nowhere yet.
    Returns ``(time, block, j, cur)``; ``time`` is ``inf`` past the horizon.
    """
    if rate <= 0.0:
        return np.inf, block, j, cur
    if j > 0 and cur > after:
        return (cur if cur <= horizon else np.inf), block, j, cur
    width = BLOCK_RINGS / rate
    b_after = np.int64(math.floor(after / width))
    if block < b_after:
        block = b_after
    while True:
        start = block * width
        if start > horizon:
            return np.inf, block, 0, start
        bkey = block_key(skey, block)
        n = block_count(bkey)
        best = np.inf
        bi = -1
        for i in range(n):
            ti = start + width * gap_uniform(bkey, i)
            if ti > after and ti < best:
                best = ti
                bi = i
        if bi >= 0:
            if best > horizon:
                return np.inf, block, bi + 1, best
            return best, block, bi + 1, best
        block += 1


@dataclass(frozen=True)
class ClockField:
    """Immutable realization of all bond clocks up to ``horizon``."""

    master_seed: int
    rate_right: float
    rate_left: float
    horizon: float

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if abs(self.rate_right + self.rate_left - 1.0) > 1e-12:
            raise ValueError("rate_right + rate_left must equal 1")
        if not 0.5 < self.rate_right <= 1.0:
            raise ValueError("rate_right must lie in (1/2, 1]")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @classmethod
    def from_p(cls, master_seed: int, p: float, horizon: float) -> "ClockField":
        return cls(master_seed, p, 1.0 - p if p < 1.0 else 0.0, horizon)

    def rate(self, direction: int) -> float:
        return self.rate_right if direction == RIGHT else self.rate_left

    def for_trial(self, index: int) -> "ClockField":
        """Field of trial ``index``: independent clocks, same rates."""
        seed = int(derive_seed(np.uint64(self.master_seed), np.int64(index)))
        return ClockField(seed, self.rate_right, self.rate_left, self.horizon)


@dataclass
class ClockCursor:
    """Forward-only position inside one stream.

    ``next_time`` is the ring the cursor sits on, ``block`` its block and
    ``stream_position`` its draw index within the block (0 before the first
    ring).  ``after`` is the latest query time; queries may not undercut it.
    """

    bond: int
    direction: int
    next_time: float = 0.0
    block: int = 0
    stream_position: int = 0
    after: float = 0.0


def ring_stream(field: ClockField, bond: int, direction: int) -> np.ndarray:
    """All ring times of stream ``(bond, direction)`` in ``[0, horizon]``."""
    rate = field.rate(direction)
    if rate <= 0.0:
        return np.empty(0)
    skey = np.uint64(stream_key(np.uint64(field.master_seed), np.int64(bond), np.int64(direction)))
    buf = np.empty(64)
    chunks = []
    for b in range(int(math.floor(field.horizon * rate / BLOCK_RINGS)) + 1):
        n = block_rings(skey, b, rate, buf)
        while n < 0:
            buf = np.empty(2 * buf.shape[0])
            n = block_rings(skey, b, rate, buf)
        if n:
            chunks.append(buf[:n].copy())
    if not chunks:
        return np.empty(0)
    rings = np.concatenate(chunks)
    return rings[rings <= field.horizon]


def next_ring(field: ClockField, cursor: ClockCursor, after: float):
    """Return ``(time or None, cursor)`` for the first ring after ``after``."""
    if after < 0:
        raise ValueError("after must be non-negative")
    if after < cursor.after:
        raise ValueError(f"cursor already at {cursor.after}; streams are forward-only")
    rate = field.rate(cursor.direction)
    skey = np.uint64(stream_key(np.uint64(field.master_seed), np.int64(cursor.bond),
                                np.int64(cursor.direction)))
    t, block, j, cur = advance(skey, rate, cursor.block, cursor.stream_position, cursor.next_time,
                               float(after), float(field.horizon))
    nxt = ClockCursor(cursor.bond, cursor.direction, float(cur), int(block), int(j), float(after))
    if not math.isfinite(t):
        return None, nxt
    return float(t), nxt
