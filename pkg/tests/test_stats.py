import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfway.analytic import normal_cdf
from halfway.stats import ecdf, empirical_quantile, kolmogorov_q, ks_p_value, ks_statistic

samples_st = st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=60)


class TestEcdf:
    def test_counting(self):
        assert ecdf([1, 2, 3])(2) == pytest.approx(2 / 3)

    def test_right_continuous(self):
        F = ecdf([5])
        assert F(4.999) == 0.0
        assert F(5) == 1.0

    def test_ties(self):
        assert ecdf([1, 1, 2])(1) == pytest.approx(2 / 3)

    def test_infinities(self):
        F = ecdf([0.3, -2.0, 9.0])
        assert F(math.inf) == 1.0
        assert F(-math.inf) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            ecdf([])

    def test_does_not_mutate_input(self):
        data = np.array([3.0, 1.0, 2.0])
        ecdf(data)
        ks_statistic(data, lambda y: np.clip(y / 4, 0, 1))
        assert list(data) == [3.0, 1.0, 2.0]


class TestKs:
    def test_single_sample_at_median(self):
        rep = ks_statistic([0.0], normal_cdf)
        assert rep.d_n == pytest.approx(0.5)
        assert rep.n == 1

    def test_uniform_lattice(self):
        n = 100
        samples = (np.arange(1, n + 1) - 0.5) / n
        rep = ks_statistic(samples, lambda y: y)
        assert rep.d_n == pytest.approx(0.005, abs=1e-15)

    @pytest.mark.parametrize("n", [1, 7, 1000])
    def test_lattice_through_inverse_cdf(self, n):
        from scipy.special import ndtri

        samples = ndtri((np.arange(1, n + 1) - 0.5) / n)
        assert ks_statistic(samples, normal_cdf).d_n == pytest.approx(1 / (2 * n), abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            ks_statistic([], normal_cdf)

    def test_bounds(self):
        rep = ks_statistic([100.0, 200.0], normal_cdf)
        assert rep.d_n == 1.0
        assert 0.0 <= rep.p_value <= 1.0


class TestPValue:
    def test_five_percent(self):
        assert kolmogorov_q(1.358) == pytest.approx(0.050, abs=0.002)

    def test_small_lambda(self):
        assert kolmogorov_q(0.01) >= 0.999999

    def test_large_lambda(self):
        assert kolmogorov_q(5.0) < 1e-10
        assert kolmogorov_q(5.0) == pytest.approx(2 * math.exp(-50), rel=1e-10)

    def test_matches_scipy_kolmogorov(self):
        from scipy.special import kolmogorov

        for lam in (0.3, 0.8, 1.0, 1.358, 1.95, 3.0):
            assert kolmogorov_q(lam) == pytest.approx(kolmogorov(lam), abs=1e-11)

    @given(st.floats(min_value=0, max_value=6), st.floats(min_value=0, max_value=6))
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert kolmogorov_q(lo) >= kolmogorov_q(hi)

    def test_from_d_n(self):
        assert ks_p_value(1.358 / 100, 10_000) == pytest.approx(kolmogorov_q(1.358), rel=1e-12)
        with pytest.raises(ValueError):
            ks_p_value(1.5, 10)


class TestQuantile:
    def test_nearest_rank(self):
        assert empirical_quantile([1, 2, 3, 4], 0.5) == 2

    def test_top(self):
        data = list(range(10))
        assert empirical_quantile(data, 0.9999) == 9

    def test_domain(self):
        with pytest.raises(ValueError):
            empirical_quantile([1.0], 1.0)
        with pytest.raises(ValueError):
            empirical_quantile([], 0.5)

    @given(samples_st, st.floats(min_value=1e-6, max_value=1 - 1e-6))
    def test_consistent_with_ecdf(self, data, q):
        assert ecdf(data)(empirical_quantile(data, q)) >= q - 1e-12

    @given(samples_st)
    def test_monotone(self, data):
        qs = np.linspace(0.01, 0.99, 25)
        vals = [empirical_quantile(data, q) for q in qs]
        assert vals == sorted(vals)
