import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asep.clockfield import (LEFT, RIGHT, ClockCursor, ClockField, block_count, block_key,
                             derive_seed, next_ring, ring_stream, stream_key)


def scan(field, bond, direction):
    cur = ClockCursor(bond, direction)
    out, after = [], 0.0
    while True:
        t, cur = next_ring(field, cur, after)
        if t is None:
            return np.array(out)
        out.append(t)
        after = t


def test_field_validation():
    with pytest.raises(ValueError):
        ClockField(1, 0.7, 0.2, 10.0)
    with pytest.raises(ValueError):
        ClockField(1, 0.4, 0.6, 10.0)
    with pytest.raises(ValueError):
        ClockField(-1, 0.75, 0.25, 10.0)
    with pytest.raises(ValueError):
        ClockField(1, 0.75, 0.25, 0.0)
    f = ClockField.from_p(3, 0.75, 5.0)
    assert abs(f.rate_right + f.rate_left - 1) < 1e-12


def test_stream_is_deterministic():
    f = ClockField.from_p(12345, 0.75, 200.0)
    a = ring_stream(f, 7, RIGHT)
    b = ring_stream(ClockField.from_p(12345, 0.75, 200.0), 7, RIGHT)
    assert np.array_equal(a, b)


def test_streams_differ_by_site_direction_and_seed():
    f = ClockField.from_p(1, 0.75, 100.0)
    a = ring_stream(f, 0, RIGHT)
    assert not np.array_equal(a[:5], ring_stream(f, 1, RIGHT)[:5])
    assert not np.array_equal(a[:5], ring_stream(f, 0, LEFT)[:5])
    assert not np.array_equal(a[:5], ring_stream(ClockField.from_p(2, 0.75, 100.0), 0, RIGHT)[:5])


def test_tasep_left_streams_are_empty():
    f = ClockField.from_p(9, 1.0, 50.0)
    assert ring_stream(f, 3, LEFT).size == 0
    t, _ = next_ring(f, ClockCursor(3, LEFT), 0.0)
    assert t is None


def test_strictly_increasing_within_horizon():
    f = ClockField.from_p(4, 0.6, 500.0)
    for d in (RIGHT, LEFT):
        r = ring_stream(f, -3, d)
        assert np.all(np.diff(r) > 0)
        assert r.size == 0 or (r[0] > 0 and r[-1] <= f.horizon)


def test_gap_mean_matches_exponential():
    f = ClockField.from_p(2024, 0.75, 1e4)
    r = ring_stream(f, 0, RIGHT)
    gaps = np.diff(np.r_[0.0, r])
    mean, sd = 1 / 0.75, 1 / 0.75
    assert abs(gaps.mean() - mean) < 3 * sd / math.sqrt(gaps.size)
    # exponential: variance equals mean squared
    assert abs(gaps.var() / gaps.mean() ** 2 - 1) < 0.1


def test_block_counts_are_poisson_one():
    key = stream_key(np.uint64(5), np.int64(0), np.int64(0))
    n = np.array([block_count(np.uint64(block_key(np.uint64(key), np.int64(b)))) for b in range(20000)])
    assert abs(n.mean() - 1) < 3 * math.sqrt(1 / n.size)
    assert abs(np.mean(n == 0) - math.exp(-1)) < 0.012


def test_counts_in_disjoint_intervals_uncorrelated():
    f = ClockField.from_p(77, 0.75, 2000.0)
    r = ring_stream(f, 5, RIGHT)
    c = np.histogram(r, bins=np.arange(0, 2001, 1.0))[0]
    rho = np.corrcoef(c[:-1], c[1:])[0, 1]
    assert abs(rho) < 4 / math.sqrt(c.size)
    assert abs(c.var() / c.mean() - 1) < 0.15


def test_after_zero_gives_first_ring():
    f = ClockField.from_p(11, 0.75, 30.0)
    t, _ = next_ring(f, ClockCursor(0, RIGHT), 0.0)
    assert t == ring_stream(f, 0, RIGHT)[0]


def test_cursor_is_forward_only():
    f = ClockField.from_p(11, 0.75, 30.0)
    _, cur = next_ring(f, ClockCursor(0, RIGHT), 5.0)
    with pytest.raises(ValueError):
        next_ring(f, cur, 4.0)
    with pytest.raises(ValueError):
        next_ring(f, ClockCursor(0, RIGHT), -1.0)


def test_random_access_matches_scan():
    f = ClockField.from_p(31, 0.75, 100.0)
    r = ring_stream(f, 2, RIGHT)
    for after in (0.0, 13.7, 50.0, r[10], 99.0):
        t, _ = next_ring(f, ClockCursor(2, RIGHT), float(after))
        later = r[r > after]
        assert (t is None and later.size == 0) or t == later[0]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), bond=st.integers(-10**6, 10**6),
       direction=st.sampled_from([RIGHT, LEFT]), p=st.sampled_from([0.55, 0.75, 0.9]))
def test_scan_reproduces_stream(seed, bond, direction, p):
    f = ClockField.from_p(seed, p, 40.0)
    assert np.array_equal(scan(f, bond, direction), ring_stream(f, bond, direction))


def test_derived_seeds_distinct():
    seeds = {int(derive_seed(np.uint64(1), np.int64(k))) for k in range(5000)}
    assert len(seeds) == 5000
    f = ClockField.from_p(1, 0.75, 10.0)
    assert f.for_trial(3).master_seed == int(derive_seed(np.uint64(1), np.int64(3)))
