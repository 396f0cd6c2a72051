import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asep.initcond import InitSpec, build
from asep.lattice import (EMPTY, FULL, POINTWISE_LE, PRECEQ, Configuration, compare, dump,
                          hole_position, leftmost_particle, omega_index, parse, position,
                          round_label, y_min)


def step(lo=-20, hi=20):
    return build(InitSpec("step"), 0.75, window=(lo, hi))


def test_step_positions():
    c = step()
    assert position(c, 1) == -1
    assert position(c, 5) == -5
    # beyond the window, the full left fill continues the labels
    assert position(c, 40) == -40
    with pytest.raises(KeyError):
        position(c, 0)


def test_shock_label_zero_at_origin():
    c = build(InitSpec("shock_ic", {"t": 100, "C": 0}), 0.75, horizon=10)
    assert position(c, 0) == 0
    assert position(c, -50) == 50
    assert position(c, 1) == -51


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration(0, 3, np.array([1, 0, 1]))
    with pytest.raises(ValueError):
        Configuration(0, 2, np.array([1, 2, 0]))
    with pytest.raises(ValueError):
        Configuration(0, 2, np.array([1, 0, 0]), left_fill="half")


def test_labels_decrease_with_site():
    c = step()
    sites = c.particle_sites
    labels = c.labels()
    assert np.all(np.diff(labels[np.argsort(sites)]) < 0)
    assert np.all(np.diff(c.particle_positions) < 0)


def test_b_data_holes():
    p, t, C = 0.75, 100, 1.0
    c = build(InitSpec("b_data", {"t": t, "C": C}), p, horizon=10)
    L = int(np.floor(0.5 * (t - C * 10)))
    for n in (1, 2, 7):
        assert hole_position(c, n) == n + L
    with pytest.raises(KeyError):
        hole_position(c, 0)


def test_reversed_step_holes_and_leftmost():
    c = build(InitSpec("reversed_step", {"Z": 3}), 0.75, window=(-10, 10))
    assert hole_position(c, 1) == 2
    assert hole_position(c, 4) == -1
    assert leftmost_particle(c) == 3
    assert omega_index(c) == 3


def test_packed_window_has_no_hole():
    c = Configuration(0, 3, np.ones(4), FULL, FULL)
    with pytest.raises(IndexError):
        hole_position(c, 1)


def test_leftmost_rules():
    c = build(InitSpec("eta_abn", {"a": -2, "b": 1, "N": 4}), 0.75, window=(-10, 10))
    assert leftmost_particle(c) == -2
    with pytest.raises(ValueError):
        leftmost_particle(step())


def test_compare_reflexive_and_preceq():
    w = (-6, 8)
    a = build(InitSpec("eta_abn", {"a": 0, "b": 0, "N": 2}), 0.75, window=w)
    b = build(InitSpec("eta_abn", {"a": 1, "b": 1, "N": 2}), 0.75, window=w)
    z = omega_index(a)
    packed = build(InitSpec("reversed_step", {"Z": z}), 0.75, window=w)
    assert compare(a, a, POINTWISE_LE).holds and compare(a, a, PRECEQ).holds
    assert compare(a, packed, PRECEQ).holds
    assert compare(a, b, PRECEQ).holds
    # brute force: hole counts right of every site
    oa, ob = a.occupancy, b.occupancy
    for i in range(oa.size):
        assert (1 - ob[i:]).sum() <= (1 - oa[i:]).sum()
    assert not compare(b, a, PRECEQ).holds or np.array_equal(oa, ob)


def test_compare_pointwise():
    s = step()
    sh = s.with_occupancy(np.r_[s.occupancy[1:], 0])
    assert compare(sh, s, POINTWISE_LE).holds
    assert not compare(s, sh, POINTWISE_LE).holds
    with pytest.raises(ValueError):
        compare(s, s, PRECEQ)
    empty_left = Configuration(-2, 2, np.zeros(5), EMPTY, EMPTY)
    assert not compare(s, empty_left).holds


def test_y_min():
    p, t = 0.75, 100
    a = build(InitSpec("a_data", {"t": t, "M": 2}), p, window=(-200, 200))
    b = build(InitSpec("b_data", {"t": t, "M": 2}), p, window=(-200, 200))
    for n in (1, 2, 5):
        assert y_min(a, b, n) == position(a, n)
        assert y_min(a, a, n) == position(a, n)


def test_round_label():
    assert round_label(8 + 0.4, 1) == 8
    assert round_label(8.5, 1) == 9
    with pytest.raises(ValueError):
        round_label(0.2, 1)


occupancies = st.lists(st.integers(0, 1), min_size=1, max_size=30)


@settings(max_examples=60, deadline=None)
@given(occ=occupancies, lo=st.integers(-50, 50), fills=st.sampled_from(
    [(FULL, EMPTY), (EMPTY, FULL), (EMPTY, EMPTY)]), anchor=st.integers(-5, 5))
def test_dump_parse_roundtrip(occ, lo, fills, anchor):
    c = Configuration(lo, lo + len(occ) - 1, np.array(occ), fills[0], fills[1], anchor_label=anchor)
    d = parse(dump(c))
    assert np.array_equal(d.occupancy, c.occupancy)
    assert (d.window_lo, d.window_hi, d.left_fill, d.right_fill, d.anchor_label) == \
        (c.window_lo, c.window_hi, c.left_fill, c.right_fill, c.anchor_label)


@settings(max_examples=40, deadline=None)
@given(occ=occupancies, pad=st.integers(0, 5))
def test_rewindow_preserves_configuration(occ, pad):
    c = Configuration(0, len(occ) - 1, np.array(occ), FULL, EMPTY)
    big = c.rewindow(-pad, len(occ) - 1 + pad)
    for s in range(-pad - 2, len(occ) + pad + 2):
        assert big.occupied(s) == c.occupied(s)
    if c.particle_sites.size:
        lab = int(c.labels()[0])
        assert position(big, lab) == position(c, lab)


def test_parse_rejects_inconsistent_labels():
    c = step(-3, 3)
    text = dump(c).replace("-1 1 1", "-1 1 7")
    with pytest.raises(ValueError):
        parse(text)
