import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asep.initcond import (InitSpec, blocking_marginal, blocking_tail_bound, blocking_window,
                           block_length, build, default_window, exact, ic2_length, sample_blocking,
                           support)
from asep.lattice import position


def test_shock_ic_layout():
    c = build(InitSpec("shock_ic", {"t": 100, "C": 0}), 0.75, window=(-120, 80))
    occ = {s for s in c.particle_sites.tolist()}
    assert set(range(0, 51)) <= occ
    assert all(s not in occ for s in range(-50, 0))
    assert {-51, -52, -60} <= occ
    assert c.occupied(-1000) == 1 and c.occupied(1000) == 0


def test_eta_abn():
    c = build(InitSpec("eta_abn", {"a": 0, "b": 0, "N": 2}), 0.75, window=(-5, 8))
    assert c.particle_sites.tolist() == [0] + list(range(3, 9))
    assert c.occupied(100) == 1 and c.occupied(-100) == 0
    with pytest.raises(ValueError):
        InitSpec("eta_abn", {"a": 2, "b": 1, "N": 3})


def test_tasep_shock_block():
    t = 40
    c = build(InitSpec("tasep_shock", {"beta": 1 - 1 / t, "t": t}), 1.0, horizon=t)
    assert position(c, -(t - 1)) == t - 1
    assert position(c, 1) == -1 - (t - 1)


def test_ab_data():
    p, t, M = 0.75, 400, 2
    L = block_length(p, t, M=M)
    a = build(InitSpec("a_data", {"t": t, "M": M}), p, horizon=1)
    b = build(InitSpec("b_data", {"t": t, "M": M}), p, horizon=1)
    eta = build(InitSpec("shock_ic", {"t": t, "M": M}), p, horizon=1)
    for n in (1, 2, 3):
        assert position(a, n) == position(eta, n) == -n - L
        assert position(b, n) == -n
    assert position(b, -L) == L


def test_ic2_and_d_data():
    c = build(InitSpec("shock_ic2", {"t": 1000, "nu": 0.3}), 0.75, horizon=1)
    L = ic2_length(1000, 0.3)
    assert L == math.floor(1000 - 2 * 1000 ** 0.65)
    assert position(c, 0) == 0 and position(c, 1) == -1 - L
    d = build(InitSpec("d_data", {"t": 100, "C": 0}), 0.75, horizon=1)
    assert d.particle_sites.tolist() == list(range(51))


@settings(max_examples=60, deadline=None)
@given(t=st.integers(1, 10**6), c=st.sampled_from([0, 0.5, 1, 2.5, 3.7]),
       p=st.sampled_from([0.55, 0.6, 0.75, 0.9, 1.0]))
def test_block_length_floor_is_exact(t, c, p):
    d = 2 * exact(p) - 1
    with mpmath.workdps(80):
        val = mpmath.mpf(d.numerator) / d.denominator * (t - mpmath.mpf(Fraction(repr(c)).numerator)
                                                          / Fraction(repr(c)).denominator * mpmath.sqrt(t))
        ref = int(mpmath.floor(val + mpmath.mpf(10) ** -60))
    assert block_length(p, t, C=c) == ref


def test_floor_on_exact_integers():
    # (p - q) t with t a perfect square and C = 0 hits integers exactly
    assert block_length(0.75, 100, C=0) == 50
    assert block_length(0.75, 100, C=2) == 40
    assert block_length(0.6, 25, C=1) == 4


def test_window_policies():
    s = InitSpec("step")
    lo, hi = default_window(s, 0.75, 100.0, guard=10)
    w = math.ceil(0.5 * 100 + 60 + 10)
    assert (lo, hi) == (-1 - w, w)
    with pytest.raises(ValueError):
        build(s, 0.75, window=(0, 5))
    with pytest.raises(ValueError):
        build(s, 0.75)
    assert support(InitSpec("reversed_step", {"Z": 4}), 0.75) == (3, 4)


def test_spec_domain_errors():
    with pytest.raises(ValueError):
        InitSpec("nope")
    with pytest.raises(ValueError):
        InitSpec("shock_ic", {"t": -1})
    with pytest.raises(ValueError):
        InitSpec("shock_ic2", {"t": 10, "nu": 1.5})
    with pytest.raises(ValueError):
        InitSpec("tasep_shock", {"beta": 1.0, "t": 10})
    with pytest.raises(ValueError):
        InitSpec("reversed_step")
    s = InitSpec("shock_ic", {"t": 5, "M": 1})
    assert InitSpec.from_dict(s.to_dict()) == s


def test_blocking_marginal_half_at_balance():
    p, c = 0.75, 1.0
    assert blocking_marginal(0, c, p) == pytest.approx(0.5, abs=1e-15)
    c = 3.0 ** 2
    assert blocking_marginal(-2, c, p) == pytest.approx(0.5, abs=1e-15)
    i = np.arange(-5, 6)
    r = (p / (1 - p)) ** i
    assert np.allclose(blocking_marginal(i, 1.0, p), r / (1 + r), rtol=1e-14)
    with pytest.raises(ValueError):
        blocking_marginal(0, 1.0, 1.0)


def test_blocking_window_tail_bound():
    for p, c in ((0.75, 1.0), (0.6, 0.1), (0.9, 40.0)):
        w = blocking_window(c, p)
        assert blocking_tail_bound(c, p, w) < 1e-12
        assert blocking_tail_bound(c, p, (w[0] + 1, w[1])) >= 5e-13 or \
            blocking_tail_bound(c, p, (w[0], w[1] - 1)) >= 5e-13
        r = p / (1 - p)
        left = sum(c * r ** i / (1 + c * r ** i) for i in range(w[0] - 200, w[0]))
        assert left < 1e-12


def test_blocking_sampler_marginals():
    p, c = 0.75, 1.0
    lo, hi = blocking_window(c, p)
    n = 20000
    occ = np.stack([sample_blocking(c, p, seed=k).occupancy for k in range(n)])
    sites = np.arange(lo, hi + 1)
    pi = blocking_marginal(sites, c, p)
    se = np.sqrt(pi * (1 - pi) / n)
    mid = (pi > 0.01) & (pi < 0.99)
    assert np.all(np.abs(occ.mean(axis=0)[mid] - pi[mid]) < 4 * se[mid])


def test_blocking_sampler_errors():
    with pytest.raises(ValueError):
        sample_blocking(1.0, 0.75, window=(-3, 3))
    with pytest.raises(ValueError):
        sample_blocking(0.0, 0.75)
    with pytest.raises(ValueError):
        sample_blocking(1.0, 1.0)
    a = sample_blocking(1.0, 0.75, seed=5, pad=4)
    b = sample_blocking(1.0, 0.75, seed=5, pad=4)
    assert np.array_equal(a.occupancy, b.occupancy)
    assert a.occupancy[:4].sum() == 0 and a.occupancy[-4:].sum() == 4
