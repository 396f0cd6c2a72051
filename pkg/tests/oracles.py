"""Independent reference computations used to freeze tests/data/oracles.json.

None of these call into the package's law or simulation code.
"""
from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
from scipy import sparse, stats
from scipy.sparse.linalg import spsolve


def gue_edge_mc(s: float, n_samples: int, N: int = 10**6, rows: int = 1200, seed: int = 1):
    """Monte Carlo P(scaled largest GUE eigenvalue <= s).

    Dumitriu-Edelman tridiagonal model at beta = 2 (diagonal N(0, 1),
    off-diagonals chi_{2k}/sqrt(2)), edge 2 sqrt(N), scale N^(-1/6).  Only the
    leading ``rows`` rows are kept: the top eigenvector lives on the first
    O(N^(1/3)) of them.  The event {lambda_max <= x} is read off a Sturm count
    (all LDL^T pivots of T - x negative), vectorized over samples.
    """
    rng = np.random.default_rng(seed)
    x = 2 * math.sqrt(N) + s * N ** (-1 / 6)
    hits, done, batch = 0, 0, 20000
    df = 2.0 * (N - np.arange(1, rows))
    while done < n_samples:
        m = min(batch, n_samples - done)
        diag = rng.standard_normal((m, rows))
        off2 = rng.chisquare(df, size=(m, rows - 1)) / 2.0
        d = diag[:, 0] - x
        neg = d < 0
        for k in range(1, rows):
            d = diag[:, k] - x - off2[:, k - 1] / d
            neg &= d < 0
        hits += int(neg.sum())
        done += m
    return hits, n_samples


def gue2_cdf(s: float) -> float:
    """CDF of the largest eigenvalue of a 2x2 GUE with density exp(-tr H^2 / 2).

    Integrating (x-y)^2 phi(x) phi(y) over the quadrant gives
    Phi (Phi - s phi) - phi^2.
    """
    P, d = stats.norm.cdf(s), stats.norm.pdf(s)
    return float(P * (P - s * d) - d * d)


def brownian_sup2_mc(s: float, n_samples: int, seed: int = 2):
    """Monte Carlo P(sup_{0<=u<=1} [B1(u) + B2(1) - B2(u)] <= s), sampled exactly.

    With U = (B1 - B2)/sqrt(2) and V = (B1 + B2)/sqrt(2) the functional is
    sqrt(2) max U + (V(1) - U(1))/sqrt(2); the maximum of a Brownian path
    given its endpoint u is (u + sqrt(u^2 - 2 log W))/2 with W uniform.
    """
    rng = np.random.default_rng(seed)
    hits, done, batch = 0, 0, 10**6
    while done < n_samples:
        m = min(batch, n_samples - done)
        u = rng.standard_normal(m)
        v = rng.standard_normal(m)
        w = rng.random(m)
        mx = 0.5 * (u + np.sqrt(u * u - 2 * np.log(w)))
        z = math.sqrt(2) * mx + (v - u) / math.sqrt(2)
        hits += int(np.count_nonzero(z <= s))
        done += m
    return hits, n_samples


def poisson_walk_tail(threshold: float, t: float, start: int = -1) -> float:
    """P(start + N(t) >= threshold) for a rate-one Poisson counter N."""
    k = math.ceil(threshold - start)
    if k <= 0:
        return 1.0
    return float(stats.poisson.sf(k - 1, t))


def airy_mp(x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.airyai(x))


def phi_cdf(s: float) -> float:
    return float(mpmath.ncdf(s))


def _omega_states(lo: int, hi: int, Z: int):
    """Occupancies on [lo, hi] in Omega_Z: particles left of Z match holes right of it."""
    left = Z - lo
    right = hi - Z + 1
    for k in range(0, min(left, right) + 1):
        for pl in itertools.combinations(range(left), k):
            for hr in itertools.combinations(range(right), k):
                occ = [0] * left + [1] * right
                for i in pl:
                    occ[i] = 1
                for j in hr:
                    occ[left + j] = 0
                yield tuple(occ)


def mixing_mean_exact(a: int, b: int, N: int, p: float, lo: int, hi: int) -> float:
    """Expected hitting time of the packed state from 1_{a..b} + 1_{>=N+1},
    by solving the generator on a finite window (jumps out of it suppressed)."""
    q = 1.0 - p
    occ0 = tuple(int((a <= i <= b) or i >= N + 1) for i in range(lo, hi + 1))
    left = np.r_[0, np.cumsum(occ0)]
    holes_right = np.r_[np.cumsum((1 - np.array(occ0))[::-1])[::-1], 0]
    Z = lo + int(np.flatnonzero(left - holes_right == 0)[0])
    states = list(_omega_states(lo, hi, Z))
    index = {s: i for i, s in enumerate(states)}
    target = tuple(int(i >= Z) for i in range(lo, hi + 1))
    n = len(states)
    rows, cols, vals = [], [], []
    for i, s in enumerate(states):
        if s == target:
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
            continue
        out = 0.0
        for x in range(len(s) - 1):
            if s[x] == 1 and s[x + 1] == 0:
                r = p
            elif s[x] == 0 and s[x + 1] == 1:
                r = q
            else:
                continue
            t = list(s)
            t[x], t[x + 1] = t[x + 1], t[x]
            j = index[tuple(t)]
            rows.append(i)
            cols.append(j)
            vals.append(-r)
            out += r
        rows.append(i)
        cols.append(i)
        vals.append(out)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rhs = np.array([0.0 if s == target else 1.0 for s in states])
    h = spsolve(A.tocsc(), rhs)
    return float(h[index[occ0]])
