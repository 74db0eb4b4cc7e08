import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axion_ed import solution_catalog as cat
from axion_ed.fields_core import (
    DomainViolation,
    FieldConfiguration,
    FieldState,
    NonFiniteField,
    SpacetimePoint,
    StencilScheme,
    curl_and_div,
    dalembertian,
    numeric_gradient,
    vacuum,
)

coord = st.floats(-3, 3, allow_nan=False)
point = st.tuples(coord, coord, coord, coord)


def test_gradient_of_constant_is_zero():
    g = numeric_gradient(lambda X: np.full(X.shape[0], 5.0), (0.3, -1.0, 2.0, 0.5))
    assert np.all(g == 0.0)


def test_gradient_of_time_square():
    g = numeric_gradient(lambda X: X[:, 0] ** 2, (1.0, 0.0, 0.0, 0.0))
    assert np.allclose(g, [2, 0, 0, 0], atol=1e-10)


def test_gradient_of_null_wave_with_coarse_step():
    s = StencilScheme(order=4, h=1e-2)
    g = numeric_gradient(lambda X: np.sin(X[:, 0] - X[:, 1]), (0.3, 0.1, 0.0, 0.0), s)
    c = math.cos(0.2)
    assert np.allclose(g, [c, -c, 0, 0], atol=1e-8)


@pytest.mark.parametrize("f, expected", [
    (lambda X: X[:, 0] ** 2, 2.0),
    (lambda X: X[:, 1] ** 2, -2.0),
    (lambda X: np.sin(X[:, 0] - X[:, 1]), 0.0),
])
def test_dalembertian_examples(f, expected):
    assert dalembertian(f, (0.4, 0.7, -0.2, 0.1)) == pytest.approx(expected, abs=1e-8)


def test_curl_of_shear_field():
    curl, div = curl_and_div(lambda X: np.column_stack([X[:, 2], 0 * X[:, 0], 0 * X[:, 0]]), (0.1, 0.2, 0.3, 0.4))
    assert np.allclose(curl, [0, 0, -1], atol=1e-10)
    assert div == pytest.approx(0.0, abs=1e-10)


def test_curl_and_div_of_position():
    curl, div = curl_and_div(lambda X: X[:, 1:].copy(), (0.1, 0.2, 0.3, 0.4))
    assert np.allclose(curl, 0.0, atol=1e-10)
    assert div == pytest.approx(3.0, abs=1e-10)


def test_curl_of_radial_massive_magnetic_field_matches_analytic():
    # B = -q x / r^3 is a gradient field away from the origin, so its curl vanishes;
    # its divergence vanishes too (point source).
    cfg = cat.instantiate("RadialMassive", {"q": 1.0, "c1": 1.0, "m": 1.0})
    curl, div = curl_and_div(lambda X: cfg.evaluate(X)[1], (0.5, 1.0, 1.0, 1.0))
    assert np.allclose(curl, 0.0, atol=1e-6)
    assert div == pytest.approx(0.0, abs=1e-6)


def test_curl_of_nontrivial_field_against_hand_derivative():
    # v = (x2 x3, x1^2, sin x1): curl = (0 - 0, x2 - cos x1, 2 x1 - x3)
    v = lambda X: np.column_stack([X[:, 2] * X[:, 3], X[:, 1] ** 2, np.sin(X[:, 1])])
    x = np.array([0.0, 0.7, -0.4, 1.1])
    curl, div = curl_and_div(v, x)
    assert np.allclose(curl, [0.0, x[2] - math.cos(x[1]), 2 * x[1] - x[3]], atol=1e-9)
    assert div == pytest.approx(0.0, abs=1e-9)


@given(point, st.lists(st.floats(-2, 2), min_size=5, max_size=5))
def test_gradient_exact_on_quartics(pt, c):
    # degree <= stencil order: the 4th-order stencil is exact up to rounding
    def f(X):
        x0, x1, x2, x3 = X.T
        return c[0] * x0 ** 4 + c[1] * x1 ** 3 * x2 + c[2] * x3 ** 2 + c[3] * x0 * x1 + c[4]

    x0, x1, x2, x3 = pt
    exact = [4 * c[0] * x0 ** 3 + c[3] * x1, 3 * c[1] * x1 ** 2 * x2 + c[3] * x0, c[1] * x1 ** 3, 2 * c[2] * x3]
    assert np.allclose(numeric_gradient(f, pt), exact, atol=1e-10 * max(1, max(map(abs, pt))) ** 4 * 100)


@given(point)
def test_second_order_stencil_converges_at_rate_two(pt):
    f = lambda X: np.sin(X[:, 0] + 0.5 * X[:, 1]) * np.cos(0.3 * X[:, 2] - X[:, 3])
    exact = numeric_gradient(f, pt, StencilScheme(order=4, h=1e-3))
    e1 = np.abs(numeric_gradient(f, pt, StencilScheme(order=2, h=0.02)) - exact)
    e2 = np.abs(numeric_gradient(f, pt, StencilScheme(order=2, h=0.01)) - exact)
    big = e1 > 1e-7
    if np.any(big):
        ratios = e1[big] / e2[big]
        assert np.all((ratios > 4 * 0.8) & (ratios < 4 * 1.2))


@given(point)
def test_dalembertian_agrees_with_nested_gradients(pt):
    f = lambda X: np.exp(0.3 * X[:, 0]) * np.sin(X[:, 1] - 0.5 * X[:, 3]) + X[:, 2] ** 2
    s = StencilScheme()

    def grad_component(mu):
        return lambda X: np.array([numeric_gradient(f, x, s)[mu] for x in X])

    nested = sum(sgn * numeric_gradient(grad_component(mu), pt, s)[mu]
                 for mu, sgn in enumerate((1, -1, -1, -1)))
    assert dalembertian(f, pt, s) == pytest.approx(nested, abs=10 * s.tol(pt) + 1e-6)


def test_spacetime_point_rejects_nan():
    with pytest.raises(ValueError):
        SpacetimePoint(0.0, float("nan"), 0.0, 0.0)


def test_field_state_rejects_infinite():
    with pytest.raises(NonFiniteField):
        FieldState(np.array([np.inf, 0, 0]), np.zeros(3), 0.0)


def test_evaluate_outside_domain_raises():
    cfg = FieldConfiguration(vacuum().evaluator, lambda X: X[:, 0] > 0)
    with pytest.raises(DomainViolation):
        cfg.evaluate((-1.0, 0, 0, 0))


def test_stencil_domain_violation_near_boundary():
    with pytest.raises(DomainViolation):
        numeric_gradient(lambda X: X[:, 0], (0.0, 0.0, 0.0, 0.0), domain=lambda X: X[:, 0] >= 0)


def test_stencil_rejects_bad_order():
    with pytest.raises(ValueError):
        StencilScheme(order=3)


def test_default_tolerance_scales_with_point():
    s = StencilScheme()
    assert s.tol((0, 0, 0, 0)) == pytest.approx(100 * 1e-12 + 1e-9)
    assert s.tol((4, 0, 0, 0)) == pytest.approx(100 * (4e-3) ** 4 + 1e-9)


def test_vacuum_state_is_zero():
    st_ = vacuum()((0.1, 0.2, 0.3, 0.4))
    assert np.all(st_.E == 0) and np.all(st_.B == 0) and st_.theta == 0.0
