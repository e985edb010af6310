import math

import numpy as np
import pytest

from halfway.analytic import HalfwayParams, halfway_density, hitting_time_cdf, hitting_time_density
from halfway.quadrature import (
    RULE_SIZE,
    QuadratureError,
    cumulative_integral,
    halfway_density_oracle_excursion,
    halfway_density_oracle_killed,
    integrate_adaptive,
    integrate_semi_infinite,
)


def normal_pdf(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


@pytest.mark.parametrize("degree", range(23))
def test_kronrod_rule_exact_for_polynomials(degree):
    # one application of the 15-point rule integrates degree <= 22 exactly
    res = integrate_adaptive(lambda t: t**degree, 0.0, 1.0, tol=1.0)
    assert res.evaluations == RULE_SIZE
    assert res.value == pytest.approx(1.0 / (degree + 1), rel=1e-14)


def test_constant():
    res = integrate_adaptive(lambda t: np.ones_like(t), 0.0, 1.0, 1e-10)
    assert res.value == 1.0
    assert res.abs_error_estimate <= 1e-10


def test_normal_mass():
    res = integrate_adaptive(normal_pdf, -8.0, 8.0, 1e-12)
    assert abs(res.value - 1.0) <= 1e-12
    assert res.converged


def test_hitting_density_on_bounded_range():
    f = lambda t: hitting_time_density(1.0, t)
    head = integrate_adaptive(f, 1e-6, 1e3, 1e-11)
    assert head.value == pytest.approx(hitting_time_cdf(1.0, 1e3) - hitting_time_cdf(1.0, 1e-6), abs=1e-10)
    assert head.value == pytest.approx(0.974772879369960388542, abs=1e-10)


@pytest.mark.parametrize(
    "f,exact,a,b",
    [
        (normal_pdf, 1.0, -8.0, 8.0),
        (np.exp, math.e - 1.0, 0.0, 1.0),
        (lambda t: 1.0 / (1.0 + t * t), math.atan(1e9), 0.0, 1e9),
        (lambda t: np.sqrt(t), 2.0 / 3.0, 0.0, 1.0),
    ],
)
def test_error_estimate_is_honest(f, exact, a, b):
    res = integrate_adaptive(f, a, b, 1e-9)
    # floor: a few ulps of rounding in the final sum
    assert abs(res.value - exact) <= 10 * res.abs_error_estimate + 1e-15


def test_deterministic():
    f = lambda t: np.sin(t) ** 2 * np.exp(-t)
    assert integrate_adaptive(f, 0.0, 20.0, 1e-12) == integrate_adaptive(f, 0.0, 20.0, 1e-12)


def test_non_convergence_carries_estimate():
    f = lambda t: 1.0 / np.sqrt(np.abs(t - 0.3))
    with pytest.raises(QuadratureError) as info:
        integrate_adaptive(f, 0.0, 1.0, 1e-14, max_intervals=20)
    assert info.value.result is not None
    assert not info.value.result.converged
    assert info.value.result.value > 0


def test_rejects_bad_interval():
    with pytest.raises(ValueError):
        integrate_adaptive(np.exp, 1.0, 1.0, 1e-10)


class TestSemiInfinite:
    def test_exponential(self):
        assert integrate_semi_infinite(lambda t: np.exp(-t), 0.0, 1e-10).value == pytest.approx(1.0, abs=1e-10)

    def test_rational(self):
        res = integrate_semi_infinite(lambda t: 1.0 / (1.0 + t) ** 2, 0.0, 1e-10)
        assert res.value == pytest.approx(1.0, abs=1e-10)

    def test_hitting_time_is_finite_almost_surely(self):
        res = integrate_semi_infinite(lambda t: hitting_time_density(1.0, t), 0.0, 1e-10)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_shifted_start(self):
        res = integrate_semi_infinite(lambda t: np.exp(-t), 2.0, 1e-12)
        assert res.value == pytest.approx(math.exp(-2.0), abs=1e-12)

    def test_flags_non_integrable(self):
        with pytest.raises(QuadratureError):
            integrate_semi_infinite(lambda t: 1.0 / (1.0 + t), 0.0, 1e-8)


class TestCumulative:
    def test_matches_closed_form(self):
        pts = np.array([3.0, 0.5, 0.5, 7.0, 0.0, 1.0])
        got = cumulative_integral(lambda t: np.exp(-t), 0.0, pts, 1e-12)
        assert np.allclose(got, 1.0 - np.exp(-pts), atol=1e-12)

    def test_many_points(self):
        rng = np.random.default_rng(3)
        pts = rng.exponential(size=5000)
        got = cumulative_integral(normal_pdf, 0.0, pts, 1e-12)
        from halfway.analytic import normal_cdf
        assert np.max(np.abs(got - (normal_cdf(pts) - 0.5))) <= 1e-11


HALF = 1.6 / math.pi


class TestOracles:
    def test_killed_oracle_value(self):
        assert halfway_density_oracle_killed(HalfwayParams(1.0, 0.5), 1.0) == pytest.approx(HALF, rel=1e-10)

    def test_excursion_oracle_value(self):
        assert halfway_density_oracle_excursion(HalfwayParams(1.0, 0.5), 1.0) == pytest.approx(HALF, rel=1e-10)

    def test_scaled_example(self):
        p = HalfwayParams(2.0, 0.5)
        assert halfway_density_oracle_killed(p, 2.0) == pytest.approx(0.254647908947032537230, rel=1e-9)
        assert halfway_density_oracle_excursion(p, 2.0) == pytest.approx(0.254647908947032537230, rel=1e-9)

    def test_near_origin(self):
        assert halfway_density_oracle_killed(HalfwayParams(1.0, 0.5), 1e-6) <= 1e-11

    @pytest.mark.parametrize("u,x,y", [(0.25, 1.0, 3.0), (0.9, 0.5, 0.5), (0.1, 2.0, 150.0), (0.75, 0.5, 0.006)])
    def test_three_way(self, u, x, y):
        p = HalfwayParams(x, u)
        closed = halfway_density(p, y)
        assert halfway_density_oracle_killed(p, y) == pytest.approx(closed, rel=1e-6)
        assert halfway_density_oracle_excursion(p, y) == pytest.approx(closed, rel=1e-6)
