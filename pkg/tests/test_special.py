from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special as sp

from tflab.errors import DomainError
from tflab.special import (
    erfc,
    log_factorial,
    log_factorial_array,
    log_poisson_head,
    log_poisson_tail,
    reg_gamma_pq_array,
    reg_lower_gamma,
    reg_lower_gamma_with_error,
    reg_upper_gamma,
)


def poisson_sum_P(k: int, x: float) -> float:
    """P(k+1, x) = 1 - e^{-x} sum_{j<=k} x^j / j!, in exact rational-free float sums."""
    return 1.0 - math.exp(-x) * math.fsum(x**j / math.factorial(j) for j in range(k + 1))


def quad_P(a: float, x: float) -> float:
    val, _ = integrate.quad(lambda t: t ** (a - 1) * math.exp(-t), 0, x, epsabs=0, epsrel=1e-13, limit=200)
    return val / math.gamma(a)


class TestRegLowerGamma:
    def test_closed_forms(self):
        assert reg_lower_gamma(1, 2) == pytest.approx(1 - math.exp(-2), abs=1e-15)
        assert reg_lower_gamma(1, 2) == pytest.approx(0.864664717, abs=1e-9)
        assert reg_lower_gamma(5, 0) == 0.0
        assert reg_lower_gamma(2, 2) == pytest.approx(1 - 3 * math.exp(-2), abs=1e-15)
        assert reg_lower_gamma(2, 2) == pytest.approx(0.593994150, abs=1e-9)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 7.0, 13.0, 40.0])
    @pytest.mark.parametrize("x", [0.1, 1.0, 4.0, 12.566, 30.0])
    def test_against_quadrature(self, a, x):
        assert reg_lower_gamma(a, x) == pytest.approx(quad_P(a, x), rel=1e-10, abs=1e-14)

    @pytest.mark.parametrize("k", [0, 5, 12, 30, 60])
    def test_poisson_sum(self, k):
        x = 4 * math.pi
        assert reg_lower_gamma(k + 1, x) == pytest.approx(poisson_sum_P(k, x), abs=1e-12)

    def test_complement(self):
        for a, x in [(3.0, 1.0), (50.0, 60.0), (200.0, 150.0)]:
            assert reg_lower_gamma(a, x) + reg_upper_gamma(a, x) == pytest.approx(1.0, abs=1e-14)

    def test_deep_tail_relative_accuracy(self):
        # P(a, x) far below underflow of 1 - Q
        for a, x in [(100.0, 10.0), (300.0, 12.566), (40.0, 0.5)]:
            assert reg_lower_gamma(a, x) == pytest.approx(sp.gammainc(a, x), rel=1e-11)

    def test_with_error(self):
        r = reg_lower_gamma_with_error(7.0, 3.0)
        assert r.value == pytest.approx(sp.gammainc(7.0, 3.0), rel=1e-13)
        assert 0 <= r.est_abs_error < 1e-12

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            reg_lower_gamma(0.0, 1.0)
        with pytest.raises(DomainError):
            reg_lower_gamma(1.0, -1.0)
        with pytest.raises(DomainError):
            reg_lower_gamma(float("nan"), 1.0)

    def test_array(self):
        a = np.array([1.0, 5.0, 20.0, 80.0])
        x = np.array([0.5, 5.0, 10.0, 100.0])
        p, q = reg_gamma_pq_array(a, x)
        np.testing.assert_allclose(p, sp.gammainc(a, x), rtol=1e-12)
        np.testing.assert_allclose(q, sp.gammaincc(a, x), rtol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.05, 300), st.floats(0.0, 400))
    def test_property_bounds_and_scipy(self, a, x):
        p = reg_lower_gamma(a, x)
        assert 0.0 <= p <= 1.0
        assert p == pytest.approx(sp.gammainc(a, x), rel=1e-9, abs=1e-300)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.5, 100), st.floats(0.01, 100), st.floats(0.001, 5))
    def test_property_monotone(self, a, x, dx):
        assert reg_lower_gamma(a, x + dx) >= reg_lower_gamma(a, x) - 1e-15
        assert reg_lower_gamma(a + dx, x) <= reg_lower_gamma(a, x) + 1e-15


class TestErfc:
    def test_values(self):
        assert erfc(0.0) == 1.0
        assert erfc(1.0) == pytest.approx(0.157299207, abs=1e-9)
        oracle, _ = integrate.quad(lambda t: math.exp(-t * t), 1.0, np.inf, epsrel=1e-13)
        assert erfc(1.0) == pytest.approx(2 / math.sqrt(math.pi) * oracle, rel=1e-12)

    def test_reflection(self):
        for x in np.linspace(-6, 6, 49):
            assert erfc(x) + erfc(-x) == pytest.approx(2.0, abs=1e-15)


class TestLogFactorial:
    def test_values(self):
        assert log_factorial(0) == 0.0
        assert log_factorial(1) == 0.0
        assert log_factorial(10) == pytest.approx(math.log(3628800), abs=1e-12)
        assert log_factorial(10) == pytest.approx(15.104412573, abs=1e-9)

    def test_large_against_exact_product(self):
        for n in [170, 171, 500, 2000]:
            exact = math.fsum(math.log(j) for j in range(2, n + 1))
            assert log_factorial(n) == pytest.approx(exact, rel=1e-13)

    def test_array_matches_scalar(self):
        n = np.array([0, 3, 170, 400])
        np.testing.assert_allclose(log_factorial_array(n), [log_factorial(int(v)) for v in n], rtol=1e-14)

    def test_negative(self):
        with pytest.raises(DomainError):
            log_factorial(-1)


class TestLogPoisson:
    @pytest.mark.parametrize("k,x", [(0, 1.0), (12, 4 * math.pi), (80, 4 * math.pi), (400, 50.0), (5, 200.0)])
    def test_tail_and_head(self, k, x):
        assert log_poisson_tail(k, x) == pytest.approx(math.log(sp.gammainc(k + 1, x)), rel=1e-10)
        assert log_poisson_head(k, x) == pytest.approx(math.log(sp.gammaincc(k + 1, x)), rel=1e-10)

    def test_underflow_region(self):
        # P(1001, 1) ~ e^{-1} / 1001!, far below the double range
        expected = -1.0 + math.log1p(1 / 1002 + 1 / (1002 * 1003)) - log_factorial(1001)
        assert log_poisson_tail(1000, 1.0) == pytest.approx(expected, rel=1e-6)
