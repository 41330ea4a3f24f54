import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilationlab import operator_model as om


@pytest.mark.parametrize("x,kappa,expected", [(0.0, 2, 1.0), (1.0, 7.5, 0.5), (3.0, 2, 0.1)])
def test_eval_f_values(x, kappa, expected):
    assert om.eval_f(x, kappa) == pytest.approx(expected, rel=1e-15)


def test_eval_f_rejects_nonpositive_kappa():
    with pytest.raises(ValueError):
        om.eval_f(1.0, 0.0)


@given(st.floats(-1e6, 1e6), st.floats(0.05, 20))
def test_eval_f_range(x, kappa):
    v = om.eval_f(x, kappa)
    assert 0.0 < v <= 1.0


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0), st.floats(0.1, 10))
def test_eval_f_monotone_on_half_line(a, b, kappa):
    lo, hi = sorted((a, b))
    assert om.eval_f(hi, kappa) <= om.eval_f(lo, kappa)
    assert om.eval_f(-lo, kappa) == om.eval_f(lo, kappa)


def test_theta_max_cases():
    assert om.theta_max(2) == pytest.approx(math.pi / 4 - om.EPS_CLAMP)
    assert om.theta_max(4) == pytest.approx(math.pi / 8)
    assert om.theta_max(1) == pytest.approx(math.pi / 4 - om.EPS_CLAMP)
    assert om.theta_max(0.3) == pytest.approx(math.pi / 4 - om.EPS_CLAMP)
    assert om.theta_max(100) > 0


def test_operator_spec_validation():
    om.OperatorSpec(1.0, 2.0, 0.3j)
    with pytest.raises(ValueError):
        om.OperatorSpec(1.0, 2.0, 1j * om.theta_max(2.0))
    with pytest.raises(ValueError):
        om.OperatorSpec(1.0, -1.0)
    s = om.OperatorSpec(1.0, 2.0, 0.2 + 0.1j)
    assert s.u == 0.2 and s.theta == 0.1
    assert s.with_w(0j).w == 0


def test_dilated_potential_examples():
    spec0 = om.OperatorSpec(3.0, 2.0)
    x = np.linspace(-4, 4, 17)
    np.testing.assert_allclose(om.dilated_potential(x, spec0), 3j * om.eval_f(x, 2.0), rtol=1e-15)
    for w in (0j, 0.3j, 0.2 - 0.5j):
        spec = om.OperatorSpec(1.7, 3.0, w)
        assert om.dilated_potential(0.0, spec) == pytest.approx(1.7j)
    spec = om.OperatorSpec(1.0, 2.0, 1j * math.pi / 8)
    oracle = 1j / (1 + cmath.exp(1j * math.pi / 4))
    val = complex(om.dilated_potential(1.0, spec))
    assert abs(val - oracle) < 1e-15
    assert abs(abs(val) - abs(oracle)) < 1e-15


@given(st.floats(-30, 30), st.floats(0.2, 6), st.floats(0.01, 0.99))
def test_dilated_potential_imag_sign(x, kappa, frac):
    theta = frac * om.theta_max(kappa)
    v = complex(om.dilated_potential(x, om.OperatorSpec(2.0, kappa, 1j * theta)))
    assert v.imag > 0


def test_real_part_spec_canonicalizes_sign():
    s = om.RealPartSpec(-5.0, 2.0, -0.3)
    assert s.gamma == 5.0 and s.theta == 0.3
    with pytest.raises(ValueError):
        om.RealPartSpec(1.0, 4.0, 0.5)
    with pytest.raises(ValueError):
        om.RealPartSpec(1.0, 0.0, 0.1)


def test_real_part_potential_examples():
    spec = om.RealPartSpec(10.0, 2.0, math.pi / 8)
    assert om.real_part_potential(0.0, spec) == 0.0
    oracle = 1 + 10 * math.sin(math.pi / 4) / math.cos(math.pi / 4) / abs(1 + cmath.exp(1j * math.pi / 4)) ** 2
    assert om.real_part_potential(1.0, spec) == pytest.approx(oracle, rel=1e-14)
    tiny = om.RealPartSpec(10.0, 2.0, 1e-9)
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(om.real_part_potential(x, tiny), x * x, atol=1e-6)


@given(st.floats(-20, 20), st.floats(0.3, 6), st.floats(0.05, 0.95), st.floats(0.1, 1e3))
def test_real_part_potential_symmetries(x, kappa, frac, gamma):
    theta = frac * om.theta_max(kappa)
    a = om.real_part_potential(x, om.RealPartSpec(gamma, kappa, theta))
    b = om.real_part_potential(x, om.RealPartSpec(-gamma, kappa, -theta))
    c = om.real_part_potential(-x, om.RealPartSpec(gamma, kappa, theta))
    assert a == pytest.approx(b, rel=1e-14) and a == pytest.approx(c, rel=1e-14)
    assert a >= x * x * (1 - 1e-14)


def test_real_part_potential_small_x_limit():
    spec = om.RealPartSpec(50.0, 3.0, 0.2)
    alpha = om.effective_alpha(spec)
    ratios = [(om.real_part_potential(x, spec) - x * x) / (alpha * x ** 3) for x in (1e-1, 1e-2, 1e-3)]
    assert abs(ratios[-1] - 1) < 1e-5
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)


def test_effective_alpha_examples():
    assert om.effective_alpha(om.RealPartSpec(1.0, 2.0, math.pi / 8)) == pytest.approx(1.0, rel=1e-14)
    assert om.effective_alpha(om.RealPartSpec(0.0, 2.0, 0.3)) == 0.0
    assert om.effective_alpha(om.RealPartSpec(100.0, 1.0, 0.2)) == pytest.approx(
        100 * math.sin(0.2) / math.cos(0.4), rel=1e-14)


def test_anharmonic_spec():
    with pytest.raises(ValueError):
        om.AnharmonicSpec(0.0, 2.0)
    spec = om.AnharmonicSpec(3.0, 1.5)
    assert om.anharmonic_potential(2.0, spec) == pytest.approx(3.0 * 2.0 ** 1.5)


@settings(max_examples=50)
@given(st.floats(0.01, 40), st.floats(0.1, 8))
def test_abs_pow_matches_power(x, kappa):
    assert om.abs_pow(-x, kappa) == pytest.approx(x ** kappa, rel=1e-13)
