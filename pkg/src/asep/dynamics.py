"""Event-driven ASEP under the basic coupling.

Up to eight configurations share one window; member ``m`` is bit ``m`` of a
``uint8`` occupancy word per site.  A ring of the Right clock at ``i`` swaps
sites ``i, i+1`` in every member holding a particle at ``i`` and a hole at
``i+1`` (symmetrically for Left), so all members see the same clocks.

Only active clocks (some member has a movable pair across the bond) live in
a calendar queue ordered by (time, clock id).  A clock that pops while
inactive is dropped; it is re-entered from the current time when a swap
makes it active again.  Since rings of an inactive clock change nothing,
this reproduces the full graphical construction exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

from .clockfield import LEFT, RIGHT, ClockField, advance, derive_seed, ring_stream, stream_key
from .lattice import Configuration, compare, hole_position, omega_index, position

MAX_MEMBERS = 8

OK = 0
BOUNDARY = 1
HIT = 2
PARTICLE = "particle"
HOLE = "hole"


class BoundaryTouched(RuntimeError):
    """A swap reached the guard band; the trial must be discarded."""


# -- calendar queue over (time, clock id) -----------------------------------
# Each clock has at most one pending ring, so clock ids double as queue
# nodes.  Bucket k holds rings with int(t / width) == k (stored in ``kq``),
# chained through ``nxt``; ``qi`` = [size, current bucket, size at last
# rebuild, next sample index] and ``qf`` = [width, time of last pop].  The
# width follows the queue size; pop order is (time, id) whatever the width.
@njit(cache=True, inline="always")
def _q_push(head, nxt, kq, qt, qi, qf, cid, t):
    k = np.int64(t / qf[0])
    qt[cid] = t
    kq[cid] = k
    b = k & (head.shape[0] - 1)
    nxt[cid] = head[b]
    head[b] = cid
    qi[0] += 1


@njit(cache=True)
def _q_rebuild(head, nxt, kq, qt, inq, qi, qf, rate_sum):
    size = qi[0]
    width = 1.0 / (rate_sum * max(size, 8))
    qf[0] = width
    qi[2] = max(size, 8)
    mask = head.shape[0] - 1
    for b in range(head.shape[0]):
        head[b] = -1
    for c in range(nxt.shape[0]):
        if inq[c]:
            k = np.int64(qt[c] / width)
            kq[c] = k
            nxt[c] = head[k & mask]
            head[k & mask] = c
    qi[1] = np.int64(qf[1] / width)


# -- kernel ---------------------------------------------------------------
@njit(cache=True, inline="always")
def _active(occ, n, full, cid, has_left):
    s = cid >> 1
    if (cid & 1) == 0:
        if s >= n - 1:
            return False
        return (occ[s] & (~occ[s + 1]) & full) != 0
    if not has_left or s <= 0:
        return False
    return (occ[s] & (~occ[s - 1]) & full) != 0


@njit(cache=True, inline="always")
def _schedule(cid, after, skey, rates, horizon, cblock, cj, ccur, inq,
              head, nxt, kq, qt, qi, qf):
    t, blk, j, cur = advance(skey[cid], rates[cid & 1], cblock[cid], cj[cid], ccur[cid],
                             after, horizon)
    cblock[cid] = blk
    cj[cid] = j
    ccur[cid] = cur
    if t <= horizon:
        _q_push(head, nxt, kq, qt, qi, qf, cid, t)
        inq[cid] = True


@njit(cache=True)
def _init_state(occ, lo, seed, rates, horizon, now, full,
                skey, cblock, cj, ccur, inq, head, nxt, kq, qt, qi, qf):
    n = occ.shape[0]
    has_left = rates[1] > 0.0
    for b in range(head.shape[0]):
        head[b] = -1
    qi[0] = 0
    qi[3] = 0
    qf[1] = now
    qf[0] = 1.0  # provisional; rebuilt below once the size is known
    qi[1] = np.int64(now)
    for s in range(n):
        for d in range(2):
            cid = 2 * s + d
            skey[cid] = stream_key(seed, lo + s, d)
            cblock[cid] = 0
            cj[cid] = 0
            ccur[cid] = 0.0
            inq[cid] = False
    for cid in range(2 * n):
        if _active(occ, n, full, cid, has_left):
            _schedule(cid, now, skey, rates, horizon, cblock, cj, ccur, inq,
                      head, nxt, kq, qt, qi, qf)
    _q_rebuild(head, nxt, kq, qt, inq, qi, qf, rates[0] + rates[1])


@njit(cache=True)
def _run(occ, lo, rates, horizon, until, guard, full,
         skey, cblock, cj, ccur, inq, head, nxt, kq, qt, qi, qf,
         wpos, wmember, wmin, wmax, stimes, samples,
         pairs, target, track_hit, touched, counters):
    """Apply every ring in ``(now, until]``.

    ``counters`` = [events, order violations, target mismatches];
    ``touched`` = [lo, hi] in absolute sites.  Returns (status, time of the
    last applied swap).
    """
    # The queue and activity helpers are written out inline: passing arrays
    # to helper functions costs reference-count traffic on every call.
    n = occ.shape[0]
    has_left = rates[1] > 0.0
    rate_sum = rates[0] + rates[1]
    nb = head.shape[0]
    mask = nb - 1
    sidx = qi[3]
    nw = wpos.shape[0]
    ns = stimes.shape[0]
    npair = pairs.shape[0]
    status = 0
    tlast = -1.0
    size = qi[0]
    kb = qi[1]
    width = qf[0]
    size_ref = qi[2]
    while size > 0:
        # smallest (time, id) in the current bucket, else move on
        scanned = 0
        while True:
            b = kb & mask
            c = -1
            prev = -1
            bt = np.inf
            pv = -1
            x = head[b]
            while x >= 0:
                if kq[x] == kb:
                    tx = qt[x]
                    if tx < bt or (tx == bt and x < c):
                        bt = tx
                        c = x
                        prev = pv
                pv = x
                x = nxt[x]
            if c >= 0:
                break
            kb += 1
            scanned += 1
            if scanned >= nb:
                kmin = np.iinfo(np.int64).max
                for bb in range(nb):
                    x = head[bb]
                    while x >= 0:
                        if kq[x] < kmin:
                            kmin = kq[x]
                        x = nxt[x]
                kb = kmin
                scanned = 0
        t = bt
        if t > until:
            break
        if prev < 0:
            head[b] = nxt[c]
        else:
            nxt[prev] = nxt[c]
        size -= 1
        inq[c] = False
        qf[1] = t
        while sidx < ns and stimes[sidx] < t:
            for w in range(nw):
                samples[sidx, w] = wpos[w] + lo
            sidx += 1
        s = c >> 1
        right = (c & 1) == 0
        if right:
            a = s
            bb_ = s + 1
            mv = occ[a] & (~occ[bb_]) & full
        else:
            a = s - 1
            bb_ = s
            mv = occ[bb_] & (~occ[a]) & full
        if mv == 0:
            continue
        tlast = t
        if a < guard or bb_ > n - 1 - guard:
            status = 1
            break
        before = 0
        if track_hit:
            before = int((occ[a] & 1) != target[a]) + int((occ[bb_] & 1) != target[bb_])
        occ[a] ^= mv
        occ[bb_] ^= mv
        counters[0] += 1
        if a + lo < touched[0]:
            touched[0] = a + lo
        if bb_ + lo > touched[1]:
            touched[1] = bb_ + lo
        for w in range(nw):
            if (mv >> wmember[w]) & 1:
                x = wpos[w]
                if x == a:
                    wpos[w] = bb_
                    if bb_ > wmax[w]:
                        wmax[w] = bb_
                elif x == bb_:
                    wpos[w] = a
                    if a < wmin[w]:
                        wmin[w] = a
        for k in range(npair):
            i = pairs[k, 0]
            j = pairs[k, 1]
            if ((occ[a] >> i) & 1) > ((occ[a] >> j) & 1) or ((occ[bb_] >> i) & 1) > ((occ[bb_] >> j) & 1):
                counters[1] += 1
        if track_hit:
            counters[2] += int((occ[a] & 1) != target[a]) + int((occ[bb_] & 1) != target[bb_]) - before
            if counters[2] == 0:
                status = 2
        # only these clocks can switch on: a right jump leaves a hole at a and
        # a particle at b, a left jump the reverse
        for r in range(3):
            if right:
                cid = 2 * (a - 1) if r == 0 else (2 * bb_ if r == 1 else 2 * bb_ + 1)
            else:
                cid = 2 * a if r == 0 else (2 * a + 1 if r == 1 else 2 * (bb_ + 1) + 1)
            if cid < 0 or cid >= 2 * n or inq[cid]:
                continue
            u = cid >> 1
            if (cid & 1) == 0:
                act = u < n - 1 and (occ[u] & (~occ[u + 1]) & full) != 0
            else:
                act = has_left and u > 0 and (occ[u] & (~occ[u - 1]) & full) != 0
            if not act:
                continue
            tn, blk, jj, cur = advance(skey[cid], rates[cid & 1], cblock[cid], cj[cid],
                                       ccur[cid], t, horizon)
            cblock[cid] = blk
            cj[cid] = jj
            ccur[cid] = cur
            if tn <= horizon:
                kk = np.int64(tn / width)
                qt[cid] = tn
                kq[cid] = kk
                nxt[cid] = head[kk & mask]
                head[kk & mask] = cid
                size += 1
                inq[cid] = True
        if size > 2 * size_ref or 4 * size < size_ref:
            qi[0] = size
            qi[1] = kb
            _q_rebuild(head, nxt, kq, qt, inq, qi, qf, rate_sum)
            kb = qi[1]
            width = qf[0]
            size_ref = qi[2]
        if status == 2:
            break
    if status == 0:
        while sidx < ns and stimes[sidx] <= until:
            for w in range(nw):
                samples[sidx, w] = wpos[w] + lo
            sidx += 1
    qi[0] = size
    qi[1] = kb
    qi[3] = sidx
    return status, tlast


def _queue_arrays(n: int):
    nb = 1
    while nb < 8 * n:
        nb *= 2
    return (np.empty(nb, np.int64), np.empty(2 * n, np.int64), np.empty(2 * n, np.int64),
            np.empty(2 * n, np.float64), np.zeros(4, np.int64), np.zeros(2, np.float64))


# -- python-facing state -------------------------------------------------------
@dataclass(frozen=True)
class Watch:
    """A tracked particle (by label) or hole (by hole label) of one member."""

    member: int
    label: int
    kind: str = PARTICLE

    def initial_site(self, config: Configuration) -> int:
        if self.kind == PARTICLE:
            return position(config, self.label)
        if self.kind == HOLE:
            return hole_position(config, self.label)
        raise ValueError(f"unknown watch kind {self.kind!r}")


@dataclass
class TrialOutcome:
    valid: bool
    violation: Optional[str] = None
    observables: dict = field(default_factory=dict)


def _pack(members: Sequence[Configuration]) -> np.ndarray:
    if not 1 <= len(members) <= MAX_MEMBERS:
        raise ValueError(f"between 1 and {MAX_MEMBERS} members")
    lo, hi = members[0].window_lo, members[0].window_hi
    occ = np.zeros(hi - lo + 1, dtype=np.uint8)
    for m, c in enumerate(members):
        if (c.window_lo, c.window_hi) != (lo, hi):
            raise ValueError("members must share a window")
        occ |= (c.occupancy.astype(np.uint8) << np.uint8(m))
    return occ


def _rates(field: ClockField) -> np.ndarray:
    return np.array([field.rate_right, field.rate_left], dtype=np.float64)


class CoupledEnsemble:
    """Members on a common window driven by one ClockField."""

    def __init__(self, members: Sequence[Configuration], clock: ClockField,
                 guard_margin: int = 10, now: float = 0.0,
                 order_pairs: Sequence[tuple[int, int]] = (),
                 watches: Sequence[Watch] = ()):
        self.templates = [m.copy() for m in members]
        self.clock = clock
        self.guard_margin = int(guard_margin)
        self.now = float(now)
        self.window_lo = members[0].window_lo
        self.window_hi = members[0].window_hi
        n = self.window_hi - self.window_lo + 1
        if n <= 2 * self.guard_margin + 2:
            raise ValueError("window narrower than the guard bands")
        self.occ = _pack(members)
        self.full = np.uint8((1 << len(members)) - 1)
        self.touched_lo = self.window_hi + 1
        self.touched_hi = self.window_lo - 1
        self.order_pairs = np.array(order_pairs, dtype=np.int64).reshape(-1, 2)
        for i, j in self.order_pairs:
            if not compare(members[i], members[j]).holds:
                raise ValueError(f"members {i}, {j} are not pointwise ordered initially")
        self.watches = list(watches)
        self.wpos = np.array([w.initial_site(members[w.member]) - self.window_lo
                              for w in self.watches], dtype=np.int64)
        self.wmember = np.array([w.member for w in self.watches], dtype=np.int64)
        self.wmin = self.wpos.copy()
        self.wmax = self.wpos.copy()
        self.counters = np.zeros(3, dtype=np.int64)
        self.valid = True
        seed = np.uint64(clock.master_seed)
        self.skey = np.empty(2 * n, np.uint64)
        self.cblock = np.empty(2 * n, np.int64)
        self.cj = np.empty(2 * n, np.int64)
        self.ccur = np.empty(2 * n, np.float64)
        self.inq = np.empty(2 * n, np.bool_)
        self.queue = _queue_arrays(n)
        _init_state(self.occ, np.int64(self.window_lo), seed, _rates(clock),
                    float(clock.horizon), self.now, self.full, self.skey, self.cblock,
                    self.cj, self.ccur, self.inq, *self.queue)

    @property
    def members(self) -> list[Configuration]:
        out = []
        for m, tpl in enumerate(self.templates):
            out.append(tpl.with_occupancy((self.occ >> np.uint8(m)) & np.uint8(1)))
        return out

    @property
    def order_violations(self) -> int:
        return int(self.counters[1])

    @property
    def events(self) -> int:
        return int(self.counters[0])

    def watched(self) -> dict:
        """Current, running-min and running-max sites of each watch."""
        lo = self.window_lo
        return {w: (int(self.wpos[k] + lo), int(self.wmin[k] + lo), int(self.wmax[k] + lo))
                for k, w in enumerate(self.watches)}

    def _advance(self, until, stimes, samples, target=None):
        if not self.valid:
            raise BoundaryTouched("ensemble already invalid")
        if until < self.now:
            raise ValueError(f"until={until} precedes now={self.now}")
        if until > self.clock.horizon:
            raise ValueError("until beyond the clock horizon")
        touched = np.array([self.touched_lo, self.touched_hi], dtype=np.int64)
        track = target is not None
        tgt = target if track else np.zeros(1, np.uint8)
        self.queue[4][3] = 0
        status, tlast = _run(self.occ, np.int64(self.window_lo), _rates(self.clock),
                             float(self.clock.horizon), float(until), np.int64(self.guard_margin),
                             self.full, self.skey, self.cblock, self.cj, self.ccur,
                             self.inq, *self.queue, self.wpos, self.wmember,
                             self.wmin, self.wmax, stimes, samples, self.order_pairs,
                             tgt, track, touched, self.counters)
        self.touched_lo, self.touched_hi = int(touched[0]), int(touched[1])
        if status == BOUNDARY:
            self.valid = False
            self.now = tlast
            raise BoundaryTouched(f"swap at time {tlast} entered the guard band")
        if status == HIT:
            self.now = tlast
            return tlast
        self.now = float(until)
        return None

    def evolve(self, until: float) -> "CoupledEnsemble":
        e = np.empty(0)
        self._advance(until, e, np.empty((0, len(self.watches)), np.int64))
        return self

    def evolve_tracked(self, until: float, sample_times: Sequence[float] = ()):
        """Evolve and return watched sites at ``sample_times`` (rows) per watch (columns).

        Running minima and maxima are exact and available from ``watched()``.
        """
        st = np.asarray(sorted(sample_times), dtype=np.float64)
        if st.size and (st[0] < self.now or st[-1] > until):
            raise ValueError("sample times must lie in [now, until]")
        samples = np.zeros((st.size, len(self.watches)), dtype=np.int64)
        self._advance(until, st, samples)
        return self, samples


def hitting_time(ensemble: CoupledEnsemble, target: Optional[Configuration] = None):
    """First time member 0 equals ``target`` (default: reversed step at its Omega index)."""
    cfg = ensemble.members[0]
    if target is None:
        Z = omega_index(cfg)
        sites = np.arange(cfg.window_lo, cfg.window_hi + 1)
        target = cfg.with_occupancy(sites >= Z)
    tgt = target.rewindow(cfg.window_lo, cfg.window_hi).occupancy.astype(np.uint8)
    mism = int(np.count_nonzero((ensemble.occ & 1) != tgt))
    if mism == 0:
        return ensemble.now
    ensemble.counters[2] = mism
    return ensemble._advance(ensemble.clock.horizon, np.empty(0),
                             np.empty((0, len(ensemble.watches)), np.int64), target=tgt)


# -- batched trials -------------------------------------------------------------
@njit(cache=True)
def _batch_kernel(occ0, per_trial, lo, master, first, ntrials, rates, horizon, guard, full,
                  winit, wmember, stimes, pairs, target, track_hit,
                  out_valid, out_samples, out_min, out_max, out_viol, out_hit, out_events,
                  out_touched, out_final, keep_final):
    n = occ0.shape[1]
    skey = np.empty(2 * n, np.uint64)
    cblock = np.empty(2 * n, np.int64)
    cj = np.empty(2 * n, np.int64)
    ccur = np.empty(2 * n, np.float64)
    inq = np.empty(2 * n, np.bool_)
    nb = 1
    while nb < 8 * n:
        nb *= 2
    head = np.empty(nb, np.int64)
    nxt = np.empty(2 * n, np.int64)
    kq = np.empty(2 * n, np.int64)
    qt = np.empty(2 * n, np.float64)
    qi = np.zeros(4, np.int64)
    qf = np.zeros(2, np.float64)
    nw = winit.shape[1]
    occ = np.empty(n, np.uint8)
    for k in range(ntrials):
        row = k if per_trial else 0
        for s in range(n):
            occ[s] = occ0[row, s]
        seed = derive_seed(master, first + k)
        _init_state(occ, lo, seed, rates, horizon, 0.0, full,
                    skey, cblock, cj, ccur, inq, head, nxt, kq, qt, qi, qf)
        wpos = winit[row].copy()
        wmin = wpos.copy()
        wmax = wpos.copy()
        samples = np.zeros((stimes.shape[0], nw), np.int64)
        touched = np.array([lo + n, lo - 1], dtype=np.int64)
        counters = np.zeros(3, np.int64)
        status = 0
        tlast = 0.0
        if track_hit:
            m = 0
            for s in range(n):
                if (occ[s] & 1) != target[s]:
                    m += 1
            counters[2] = m
            if m == 0:
                status = 2
        if status == 0:
            status, tlast = _run(occ, lo, rates, horizon, stimes[-1], guard, full,
                                 skey, cblock, cj, ccur, inq, head, nxt, kq, qt, qi, qf,
                                 wpos, wmember, wmin, wmax, stimes, samples,
                                 pairs, target, track_hit, touched, counters)
        out_valid[k] = status != 1
        out_hit[k] = tlast if status == 2 else (np.inf if track_hit else np.nan)
        for w in range(nw):
            out_min[k, w] = wmin[w] + lo
            out_max[k, w] = wmax[w] + lo
        out_samples[k] = samples
        out_viol[k] = counters[1]
        out_events[k] = counters[0]
        out_touched[k, 0] = touched[0]
        out_touched[k, 1] = touched[1]
        if keep_final:
            for s in range(n):
                out_final[k, s] = occ[s]


@dataclass
class BatchResult:
    """Per-trial arrays; ``samples[k, i, w]`` is watch ``w`` at sample time ``i``."""

    first_trial: int
    valid: np.ndarray
    samples: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    order_violations: np.ndarray
    hit_time: np.ndarray
    events: np.ndarray
    touched: np.ndarray
    final: Optional[np.ndarray] = None

    @property
    def trials(self) -> int:
        return int(self.valid.shape[0])

    @property
    def invalid_fraction(self) -> float:
        return float(1.0 - self.valid.mean()) if self.trials else 0.0

    def outcome(self, k: int) -> TrialOutcome:
        obs = {"order_violations": int(self.order_violations[k]),
               "events": int(self.events[k])}
        for w in range(self.samples.shape[2]):
            obs[f"watch{w}"] = int(self.samples[k, -1, w])
            obs[f"watch{w}_min"] = int(self.running_min[k, w])
            obs[f"watch{w}_max"] = int(self.running_max[k, w])
        if not math.isnan(self.hit_time[k]):
            obs["hit_time"] = float(self.hit_time[k])
        if not self.valid[k]:
            return TrialOutcome(False, "BoundaryTouched", obs)
        if self.order_violations[k]:
            return TrialOutcome(True, "InvariantBroken(order)", obs)
        return TrialOutcome(True, None, obs)

    @staticmethod
    def concat(parts: Sequence["BatchResult"]) -> "BatchResult":
        fin = None if parts[0].final is None else np.concatenate([p.final for p in parts])
        return BatchResult(parts[0].first_trial,
                           *(np.concatenate([getattr(p, f) for p in parts]) for f in
                             ("valid", "samples", "running_min", "running_max",
                              "order_violations", "hit_time", "events", "touched")),
                           final=fin)


@dataclass
class BatchSpec:
    """Everything a worker needs to run a contiguous range of trials."""

    members: list
    p: float
    master_seed: int
    sample_times: np.ndarray
    watches: list = field(default_factory=list)
    order_pairs: list = field(default_factory=list)
    target: Optional[Configuration] = None
    guard_margin: int = 10
    keep_final: bool = False
    horizon: Optional[float] = None
    member_factory: Optional[Callable[[int], list]] = None


def _prepare(spec: BatchSpec, first: int, count: int):
    if spec.member_factory is not None:
        rows = [spec.member_factory(first + k) for k in range(count)]
    else:
        rows = [spec.members]
    occ0 = np.stack([_pack(r) for r in rows])
    winit = np.array([[w.initial_site(r[w.member]) - r[0].window_lo for w in spec.watches]
                      for r in rows], dtype=np.int64).reshape(len(rows), len(spec.watches))
    return rows, occ0, winit


def _run_chunk(spec: BatchSpec, first: int, count: int) -> BatchResult:
    rows, occ0, winit = _prepare(spec, first, count)
    ref = rows[0][0]
    lo, n = ref.window_lo, ref.size
    st = np.asarray(spec.sample_times, dtype=np.float64)
    horizon = float(spec.horizon if spec.horizon is not None else st[-1])
    field_ = ClockField.from_p(spec.master_seed, spec.p, horizon)
    nw = len(spec.watches)
    pairs = np.array(spec.order_pairs, dtype=np.int64).reshape(-1, 2)
    track = spec.target is not None
    tgt = (spec.target.rewindow(lo, ref.window_hi).occupancy.astype(np.uint8)
           if track else np.zeros(1, np.uint8))
    full = np.uint8((1 << len(rows[0])) - 1)
    res = BatchResult(first, np.zeros(count, np.bool_), np.zeros((count, st.size, nw), np.int64),
                      np.zeros((count, nw), np.int64), np.zeros((count, nw), np.int64),
                      np.zeros(count, np.int64), np.zeros(count, np.float64),
                      np.zeros(count, np.int64), np.zeros((count, 2), np.int64),
                      np.zeros((count, n), np.uint8) if spec.keep_final else None)
    _batch_kernel(occ0, spec.member_factory is not None, np.int64(lo),
                  np.uint64(spec.master_seed), np.int64(first), np.int64(count), _rates(field_),
                  horizon, np.int64(spec.guard_margin), full, winit,
                  np.array([w.member for w in spec.watches], dtype=np.int64), st, pairs, tgt,
                  track, res.valid, res.samples, res.running_min, res.running_max,
                  res.order_violations, res.hit_time, res.events, res.touched,
                  res.final if spec.keep_final else np.zeros((1, 1), np.uint8), spec.keep_final)
    return res


def run_batch(spec: BatchSpec, trials: int, first: int = 0, jobs: int = 1,
              chunk: Optional[int] = None) -> BatchResult:
    """Run trials ``first .. first+trials-1``; trial ``k`` uses seed derive_seed(master, k).

    Chunks are merged in trial order, so results do not depend on ``jobs``.
    """
    if trials <= 0:
        raise ValueError("need at least one trial")
    st = np.asarray(spec.sample_times, dtype=np.float64)
    if st.size == 0 or np.any(np.diff(st) < 0) or st[0] < 0:
        raise ValueError("sample_times must be a nonempty nondecreasing list of times >= 0")
    if jobs <= 1:
        return _run_chunk(spec, first, trials)
    chunk = chunk or max(1, math.ceil(trials / (4 * jobs)))
    starts = list(range(first, first + trials, chunk))
    counts = [min(chunk, first + trials - s) for s in starts]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = list(ex.map(_run_chunk, [spec] * len(starts), starts, counts))
    return BatchResult.concat(parts)


# -- brute-force oracle ---------------------------------------------------------
def replay_reference(members: Sequence[Configuration], field: ClockField, until: float,
                     guard_margin: int = 0):
    """Apply every ring of every window clock in time order, with no activity tracking.

    Returns ``(members, event_log)``; the log lists applied swaps as
    ``(time, member_mask, site_a, site_b)``.  Slow; meant for small cases.
    """
    lo, hi = members[0].window_lo, members[0].window_hi
    rings = []
    for s in range(lo, hi + 1):
        for d in (RIGHT, LEFT):
            if (d == RIGHT and s == hi) or (d == LEFT and s == lo):
                continue
            for t in ring_stream(field, s, d):
                if t <= until:
                    rings.append((t, s - lo, d, s))
    rings.sort()
    occ = [list(m.occupancy.astype(int)) for m in members]
    log = []
    for t, _, d, s in rings:
        a, b = (s, s + 1) if d == RIGHT else (s - 1, s)
        src, dst = (a, b) if d == RIGHT else (b, a)
        mask = 0
        for m, o in enumerate(occ):
            if o[src - lo] == 1 and o[dst - lo] == 0:
                o[src - lo], o[dst - lo] = 0, 1
                mask |= 1 << m
        if mask:
            if a - lo < guard_margin or hi - b < guard_margin:
                raise BoundaryTouched(f"swap at time {t} entered the guard band")
            log.append((t, mask, a, b))
    return [m.with_occupancy(o) for m, o in zip(members, occ)], log
