import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, strategies as st
from scipy import integrate, optimize

from axion_ed.special_functions import (
    BelowBranchPoint,
    OutOfSupportedRange,
    StiffnessFailure,
    airy_ai,
    airy_bi,
    bessel_i,
    bessel_j,
    bessel_k,
    bessel_y,
    lambert_w,
    ode_defined_value,
)


def d1(f, x, h=1e-3):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def d2(f, x, h=1e-3):
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h)


def j0_quadrature(x):
    return integrate.quad(lambda t: math.cos(x * math.sin(t)), 0, math.pi, epsabs=1e-13, epsrel=0)[0] / math.pi


def ai_zero_quadrature():
    # Ai(0) = (1/pi) int_0^inf cos(t^3/3) dt; substitute u = t^3/3
    head = integrate.quad(lambda u: math.cos(u) * 3 ** (-2 / 3), 0, 1, weight="alg", wvar=(-2 / 3, 0),
                          epsabs=1e-14)[0]
    tail = integrate.quad(lambda u: (3 * u) ** (-2 / 3), 1, np.inf, weight="cos", wvar=1.0)[0]
    return (head + tail) / math.pi


# ---------------------------------------------------------------- examples

def test_j0_small_argument():
    assert bessel_j(0, 1e-8) == pytest.approx(1.0, abs=1e-10)


def test_j1_small_argument():
    assert bessel_j(1, 1e-8) == pytest.approx(5e-9, rel=1e-6)


def test_j0_first_zero_against_quadrature_bisection():
    root = optimize.bisect(j0_quadrature, 2.0, 3.0, xtol=1e-14)
    assert root == pytest.approx(2.404825557695773, abs=1e-9)
    assert abs(bessel_j(0, 2.404825557695773)) <= 1e-9


def test_ai_at_origin_against_quadrature():
    oracle = ai_zero_quadrature()
    assert oracle == pytest.approx(0.3550280538878172, abs=1e-9)
    assert airy_ai(0.0) == pytest.approx(0.3550280538878172, abs=1e-9)


@pytest.mark.parametrize("x", [-2.0, 0.0, 2.0])
def test_airy_satisfies_its_ode(x):
    assert abs(d2(airy_ai, x) - x * airy_ai(x)) <= 1e-7


def test_ai_decays_like_asymptotic_form():
    x = 10.0
    zeta = 2 / 3 * x ** 1.5
    asym = math.exp(-zeta) / (2 * math.sqrt(math.pi) * x ** 0.25) * (1 - 5 / (72 * zeta) + 385 / (10368 * zeta ** 2))
    v = airy_ai(x)
    assert 0 < v < 1e-9
    assert v == pytest.approx(asym, rel=1e-4)


def newton_w(y):
    w = 0.5
    for _ in range(100):
        w -= (w * math.exp(w) - y) / (math.exp(w) * (w + 1))
    return w


@pytest.mark.parametrize("y, want", [(0.0, 0.0), (math.e, 1.0), (1.0, None)])
def test_lambert_examples(y, want):
    want = newton_w(y) if want is None else want
    assert lambert_w(y) == pytest.approx(want, abs=1e-12)


def test_lambert_omega_constant():
    assert lambert_w(1.0) == pytest.approx(0.5671432904097838, abs=1e-12)


def test_ode_exponential():
    assert ode_defined_value(lambda x, y: y, 0.0, [1.0], 1.0)[0] == pytest.approx(math.e, abs=1e-9)


def test_ode_bessel_order_zero():
    rhs = lambda x, y: [y[1], -y[1] / x - y[0]]
    y0 = [bessel_j(0, 1.0), d1(lambda t: bessel_j(0, t), 1.0)]
    assert ode_defined_value(rhs, 1.0, y0, 2.0)[0] == pytest.approx(bessel_j(0, 2.0), abs=1e-8)


def test_ode_airy():
    rhs = lambda x, y: [y[1], x * y[0]]
    y0 = [airy_ai(0.0), d1(airy_ai, 0.0)]
    assert ode_defined_value(rhs, 0.0, y0, 1.0)[0] == pytest.approx(airy_ai(1.0), abs=1e-8)


def test_ode_blowup_reports_stiffness():
    with pytest.raises(StiffnessFailure):
        ode_defined_value(lambda x, y: y ** 2, 0.0, [1.0], 2.0)


# ---------------------------------------------------------------- errors

@pytest.mark.parametrize("fn, nu, x", [(bessel_j, 0, 0.0), (bessel_j, 0, 51.0), (bessel_y, 6, 1.0), (bessel_k, -1, 1.0)])
def test_bessel_out_of_range(fn, nu, x):
    with pytest.raises(OutOfSupportedRange):
        fn(nu, x)


def test_airy_out_of_range():
    with pytest.raises(OutOfSupportedRange):
        airy_ai(16.0)


def test_lambert_below_branch_point():
    with pytest.raises(BelowBranchPoint):
        lambert_w(-1 / math.e - 1e-6)


# ---------------------------------------------------------------- cross-checks

orders = st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.5, 5.0])


@given(orders, st.floats(0.05, 50.0))
def test_bessel_first_second_kind_against_scipy(nu, x):
    assert bessel_j(nu, x) == pytest.approx(sp.jv(nu, x), rel=1e-10, abs=1e-10)
    assert bessel_y(nu, x) == pytest.approx(sp.yv(nu, x), rel=1e-10, abs=1e-10)


@given(orders, st.floats(0.05, 50.0))
def test_modified_bessel_against_scipy(nu, x):
    assert bessel_i(nu, x) == pytest.approx(sp.iv(nu, x), rel=1e-10)
    assert bessel_k(nu, x) == pytest.approx(sp.kv(nu, x), rel=1e-10)


@given(st.floats(-15, 15))
def test_airy_against_scipy(x):
    ai, _, bi, _ = sp.airy(x)
    near_zero = 1e-9 if x < 0 else 0.0  # oscillatory side: relative error is meaningless at the zeros
    assert airy_ai(x) == pytest.approx(ai, rel=1e-9, abs=near_zero)
    assert airy_bi(x) == pytest.approx(bi, rel=1e-9, abs=near_zero)


# ---------------------------------------------------------------- invariants

@given(st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.floats(0.5, 20.0))
def test_bessel_wronskian(nu, x):
    J = lambda t: bessel_j(nu, t)
    Y = lambda t: bessel_y(nu, t)
    w = J(x) * d1(Y, x) - d1(J, x) * Y(x)
    assert w == pytest.approx(2 / (math.pi * x), rel=1e-9)


@given(st.floats(-5, 5))
def test_airy_wronskian(x):
    w = airy_ai(x) * d1(airy_bi, x) - d1(airy_ai, x) * airy_bi(x)
    assert w == pytest.approx(1 / math.pi, abs=1e-8)


@given(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0]), st.floats(0.5, 10.0))
def test_modified_bessel_ode(nu, x):
    for f in (lambda t: bessel_i(nu, t), lambda t: bessel_k(nu, t)):
        res = x * x * d2(f, x) + x * d1(f, x) - (x * x + nu * nu) * f(x)
        assert abs(res) <= 1e-7 * max(1.0, abs(f(x)) * x * x)


def test_lambert_round_trip_on_log_grid():
    y = np.logspace(-6, 6, 400)
    w = lambert_w(y)
    assert np.all(np.abs(w * np.exp(w) - y) <= 1e-12 * y)


@given(st.floats(-1 / math.e + 1e-12, 1e6))
def test_lambert_round_trip(y):
    w = lambert_w(y)
    assert w >= -1
    assert abs(w * math.exp(w) - y) <= 1e-12 * max(abs(y), 1e-300) + 1e-15
