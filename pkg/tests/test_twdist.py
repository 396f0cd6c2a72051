import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asep import twdist as tw
from asep.twdist import (ConvergenceError, DistLaw, airy_ai, airy_all, f_gue, f_M1, f_Mp,
                         f_Mp_nystrom_m1, f_step, nonhard_shock_law, product_shock_law,
                         tasep_transition_law)

ORACLES = json.loads((Path(__file__).parent / "data" / "oracles.json").read_text())


def test_airy_matches_mpmath():
    for x, v in ORACLES["airy_ai"].items():
        assert airy_ai(float(x)) == pytest.approx(v, rel=1e-12, abs=1e-16)
    assert airy_ai(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-14)


def test_airy_wronskian():
    x = np.linspace(-20, 3, 50)
    ai, dai, bi, dbi = airy_all(x)
    assert np.allclose(ai * dbi - dai * bi, 1 / math.pi, rtol=1e-12)


def test_airy_overflow_guard():
    with pytest.raises(ValueError):
        airy_ai(-500.0)
    with pytest.raises(ValueError):
        airy_ai(np.array([0.0, -201.0]))


def test_airy_kernel_symmetric_with_diagonal_limit():
    x = np.array([-1.0, 0.0, 0.7])
    K = tw.airy_kernel(x, x)
    assert np.allclose(K, K.T, atol=1e-14)
    y = x + 1e-6
    assert np.allclose(np.diag(tw.airy_kernel(x, y)), np.diag(K), atol=1e-5)


def test_fgue_limits_and_monotone():
    assert f_gue(-9.0) < 1e-20
    assert 1 - f_gue(8.0) < 1e-10
    vals = [f_gue(s) for s in np.linspace(-5, 3, 9)]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        f_gue(0.0, accuracy=1e-14)


def test_fgue_zero_against_gue_monte_carlo():
    mc = ORACLES["gue_edge_mc"]
    assert abs(f_gue(mc["s"]) - mc["estimate"]) < 3 * mc["se"]


def test_fm1_single_point_is_normal():
    for s, v in ORACLES["phi"].items():
        assert abs(f_M1(float(s), 1) - v) < 1e-10


def test_fm1_two_by_two_closed_form():
    for s, v in ORACLES["gue2_cdf"].items():
        assert abs(f_M1(float(s), 2) - v) < 1e-10


def test_fm1_two_against_brownian_supremum():
    mc = ORACLES["brownian_sup2_mc"]
    assert abs(f_M1(mc["s"], 2) - mc["estimate"]) < 3 * mc["se"]


def test_fm1_domain():
    with pytest.raises(ValueError):
        f_M1(0.0, 0)
    with pytest.raises(ValueError):
        f_M1(0.0, 1000)


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9])
def test_fmp_m1_residue_identity(p):
    for s in (-1.5, 0.0, 1.0, 2.5):
        assert abs(f_Mp(s, 1, p) - f_Mp_nystrom_m1(s, p)) < 1e-8


@pytest.mark.parametrize("M", [1, 2, 5])
def test_fmp_contour_equals_residues(M):
    for s in (-1.0, 0.5, 3.0):
        assert abs(f_Mp(s, M, 0.75) - f_Mp(s, M, 0.75, method="residue")) < 1e-8


def test_fmp_limits_and_monotone():
    assert f_Mp(-30.0, 3, 0.75) < 1e-8
    assert 1 - f_Mp(40.0, 3, 0.75) < 1e-8
    vals = [f_Mp(s, 3, 0.75) for s in np.linspace(-4, 8, 7)]
    assert np.all(np.diff(vals) > 0)


def test_fmp_rejects_p_one_and_overflow():
    with pytest.raises(ValueError, match="f_M1"):
        f_Mp(0.0, 2, 1.0)
    with pytest.raises(ValueError):
        f_Mp(0.0, 2, 0.5)
    with pytest.raises(OverflowError):
        f_Mp(0.0, tw.mp_max(0.9) + 1, 0.9)
    assert f_step(0.3, 2, 1.0) == f_M1(0.3, 2)


def test_fmp_approaches_fm1_as_p_to_one():
    # at p -> 1 the crossover law becomes the Hermite-ensemble law
    assert abs(f_Mp(0.5, 2, 0.995) - f_M1(0.5, 2)) < 0.02


def test_product_law_factorizes():
    assert product_shock_law(0.0, 0.0) == pytest.approx(f_gue(0.0) ** 2, rel=1e-12)
    assert product_shock_law(40.0, 1.0) == pytest.approx(f_gue(-1.0), rel=1e-10)


def test_nonhard_swap_symmetric_at_zero_lambda():
    for xi in (-1.0, 0.0, 2.0):
        a = nonhard_shock_law(xi, 0.0, 0.4)
        assert a == pytest.approx(nonhard_shock_law(xi, 0.0, 0.4, swap=True), rel=1e-12)


def test_transition_law_tends_to_product():
    for xi, lam in ((-1.0, 0.0), (0.0, 0.5), (1.0, -0.5)):
        assert abs(tasep_transition_law(xi, lam, 0.9999) - product_shock_law(xi, lam)) < 0.02
    with pytest.raises(ValueError):
        tasep_transition_law(0.0, 0.0, 1.0)


@settings(max_examples=15, deadline=None)
@given(s=st.floats(-4, 4), d=st.floats(0.01, 2))
def test_fm1_monotone(s, d):
    assert f_M1(s, 3) <= f_M1(s + d, 3) + 1e-12


def test_distlaw_table_and_csv():
    law = DistLaw("FMp", {"M": 2, "p": 0.75})
    v = law.evaluate([1.0, -1.0, 0.0])
    assert v[0] > v[2] > v[1]
    assert [s for s, _ in law.table] == [-1.0, 0.0, 1.0]
    lines = law.to_csv().splitlines()
    assert lines[0] == "s,value" and len(lines) == 4
    assert law.name == "FMp_M2_p0.75"
    law.table.append((2.0, 0.0))
    with pytest.raises(ValueError):
        law.check()


def test_distlaw_validates_kind_and_params():
    with pytest.raises(ValueError):
        DistLaw("Fgoe")
    with pytest.raises(ValueError):
        DistLaw("FMp", {"M": 2, "p": 1.0})
    with pytest.raises(ValueError):
        DistLaw("TasepTransition", {"lam": 0.0, "beta": 1.2})


def test_doubling_reports_nonconvergence():
    with pytest.raises(ConvergenceError):
        tw._doubling(lambda n: float(n), 4, 1e-3, "diverging")
    assert tw._doubling(lambda n: 1.0 / n**3, 64, 1e-5, "ok") < 1e-5
