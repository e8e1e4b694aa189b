"""
Tests for the log-domain arithmetic and the tail bounds.
"""

import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from gdefinetti.core.exceptions import ParameterDomainError, PreconditionError
from gdefinetti.core.mathkit import (
    LogReal,
    binom_tail_exact,
    chernoff_tail_bound,
    chi2_tail_bounds,
    chi2_tail_exact,
    incomplete_gamma_Q,
    log_binom,
    log_sum,
    pinsker_lower_bound,
    reg_beta_tail_bound,
    reg_beta_tail_exact,
    rel_entropy,
)


class TestLogReal:
    """Test sign/log-magnitude arithmetic."""

    def test_round_trip_of_ordinary_values(self):
        for value in (3.5, -0.25, 1e-300, 7.0):
            assert float(LogReal.from_float(value)) == pytest.approx(value, rel=1e-15)

    def test_zero_representation(self):
        zero = LogReal.from_float(0.0)
        assert zero.is_zero
        assert zero.sign == 0
        assert zero.log_magnitude == -math.inf
        assert zero.to_dict() == {"value": 0.0, "sign": 0, "log_abs": None}

    def test_values_below_float_range(self):
        tiny = LogReal.from_log(-1000.0)
        assert float(tiny) == 0.0
        assert not tiny.is_zero
        assert (tiny * tiny).log_magnitude == -2000.0
        assert tiny > 0

    def test_cancellation_to_exact_zero(self):
        value = LogReal.from_float(2.0)
        assert (value - value).is_zero

    def test_mixed_sign_addition(self):
        total = LogReal.from_float(5.0) + LogReal.from_float(-3.0)
        assert float(total) == pytest.approx(2.0)
        assert (LogReal.from_float(1.0) - 4.0).sign == -1

    def test_ordering_against_floats(self):
        assert LogReal.from_float(0.5) < 1
        assert LogReal.from_float(-2.0) < LogReal.zero()
        assert LogReal.from_log(10.0) >= 1000.0

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            LogReal.one() / LogReal.zero()

    def test_invalid_representation(self):
        with pytest.raises(ParameterDomainError):
            LogReal(1, -math.inf)

    def test_to_dict_keeps_log_when_value_underflows(self):
        data = LogReal.from_log(-2000.0).to_dict()
        assert data["value"] == 0.0
        assert data["log_abs"] == -2000.0


class TestLogSum:
    """Test signed log-sum-exp."""

    def test_empty_sum_is_zero(self):
        assert log_sum([]).is_zero

    def test_same_sign_sum(self):
        result = log_sum([math.log(1.0), math.log(2.0), math.log(3.0)])
        assert float(result) == pytest.approx(6.0, rel=1e-15)

    def test_signed_sum(self):
        result = log_sum([math.log(5.0), math.log(2.0)], signs=[1, -1])
        assert float(result) == pytest.approx(3.0, rel=1e-14)

    def test_far_below_float_range(self):
        result = log_sum([-5000.0, -5000.0])
        assert result.log_magnitude == pytest.approx(-5000.0 + math.log(2.0))

    def test_log_binom_matches_integers(self):
        assert math.exp(log_binom(10, 3)) == pytest.approx(120.0, rel=1e-12)
        values = np.exp(log_binom(6, np.arange(7)))
        assert values == pytest.approx([1, 6, 15, 20, 15, 6, 1], rel=1e-12)


class TestRelativeEntropy:
    """Test binary relative entropy and Pinsker's inequality."""

    def test_zero_at_equal_arguments(self):
        assert rel_entropy(0.3, 0.3) == 0.0

    def test_boundary_conventions(self):
        assert rel_entropy(0.0, 0.5) == pytest.approx(math.log(2.0))
        assert rel_entropy(1.0, 0.0) == math.inf

    def test_pinsker_dominance_on_grid(self):
        grid = np.linspace(0.0, 1.0, 102)[1:-1]
        for x in grid:
            for y in grid:
                assert rel_entropy(x, y) >= pinsker_lower_bound(x, y) - 1e-15

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            rel_entropy(1.5, 0.5)


class TestBinomialTails:
    """Test exact binomial CDFs and the Chernoff bounds."""

    @pytest.mark.parametrize("K,N,p", [(3, 10, 0.5), (0, 20, 0.1), (15, 20, 0.3), (90, 100, 0.95)])
    def test_binom_cdf_against_mpmath(self, K, N, p):
        mpmath.mp.dps = 40
        expected = mpmath.fsum(
            mpmath.binomial(N, j) * mpmath.mpf(p) ** j * (1 - mpmath.mpf(p)) ** (N - j) for j in range(K + 1)
        )
        assert float(binom_tail_exact(K, N, p)) == pytest.approx(float(expected), rel=1e-10)

    def test_binom_cdf_edges(self):
        assert binom_tail_exact(-1, 5, 0.3).is_zero
        assert float(binom_tail_exact(5, 5, 0.3)) == 1.0
        assert float(binom_tail_exact(2, 5, 0.0)) == 1.0

    def test_deep_tail_stays_in_log_domain(self):
        result = binom_tail_exact(0, 5000, 0.5)
        assert result.log_magnitude == pytest.approx(5000 * math.log(0.5), rel=1e-12)

    def test_chernoff_zero_offset_is_trivial(self):
        assert float(chernoff_tail_bound(10, 0.3, 0.0)) == 1.0

    def test_chernoff_dominates_exact_tail(self):
        for n in (5, 50, 400):
            for p in (0.1, 0.5, 0.8):
                for t in (0.05, 0.1, 0.15):
                    smallest = math.ceil((p + t) * n - 1e-12)
                    exact = stats.binom.sf(smallest - 1, n, p)
                    assert float(chernoff_tail_bound(n, p, t)) >= exact * (1 - 1e-9)

    def test_chernoff_offset_domain(self):
        with pytest.raises(ParameterDomainError):
            chernoff_tail_bound(10, 0.8, 0.5)


class TestRegularizedBetaTail:
    """Test 1 - I_eta(k, n) and its Chernoff bound."""

    def test_exact_matches_scipy(self):
        for eta, k, n in [(0.3, 4, 10), (0.9, 20, 5), (0.5, 1, 1)]:
            expected = stats.beta.sf(eta, k, n)
            assert float(reg_beta_tail_exact(eta, k, n)) == pytest.approx(expected, rel=1e-10)

    def test_small_case(self):
        # k=2, n=1, eta=0.5: 1 - I(2,1) = 1 - eta^2
        assert float(reg_beta_tail_exact(0.5, 2, 1)) == pytest.approx(0.75)

    def test_bound_is_one_at_threshold(self):
        k, n = 5, 16
        threshold = (k - 1) / (n + k - 1)
        assert float(reg_beta_tail_bound(threshold, k, n)) == pytest.approx(1.0)

    def test_bound_below_threshold_raises(self):
        with pytest.raises(PreconditionError):
            reg_beta_tail_bound(0.1, 10, 10)

    def test_bound_dominates_exact(self):
        for k in range(1, 31, 3):
            for n in range(1, 200, 7):
                for eta in (0.1, 0.3, 0.5, 0.7, 0.9):
                    if eta < (k - 1) / (n + k - 1):
                        continue
                    bound = reg_beta_tail_bound(eta, k, n)
                    exact = reg_beta_tail_exact(eta, k, n)
                    assert bound.log_magnitude >= exact.log_magnitude - 1e-9


class TestChiSquare:
    """Test Laurent-Massart deviations and incomplete gamma values."""

    def test_thresholds(self):
        bounds = chi2_tail_bounds(20, 2.0)
        assert bounds.upper_threshold == pytest.approx(20 + 2 * math.sqrt(40) + 4)
        assert bounds.lower_threshold == pytest.approx(20 - 2 * math.sqrt(40))
        assert float(bounds.upper_probability) == pytest.approx(math.exp(-2.0))

    def test_exact_tails_below_bounds(self):
        for D in (2, 10, 200, 2000):
            for x in (0.5, 3.0, math.log(2 / 1e-6)):
                bounds = chi2_tail_bounds(D, x)
                assert chi2_tail_exact(D, bounds.upper_threshold) <= bounds.upper_probability
                if bounds.lower_threshold > 0:
                    assert chi2_tail_exact(D, bounds.lower_threshold, upper=False) <= bounds.lower_probability

    def test_invalid_degrees(self):
        with pytest.raises(ParameterDomainError):
            chi2_tail_bounds(0.5, 1.0)

    def test_incomplete_gamma_against_mpmath(self):
        for s, x in [(1.0, 0.5), (10.0, 12.0), (101.0, 80.0)]:
            expected = float(mpmath.gammainc(s, x, mpmath.inf, regularized=True))
            assert incomplete_gamma_Q(s, x) == pytest.approx(expected, rel=1e-10)

    def test_incomplete_gamma_at_zero(self):
        assert incomplete_gamma_Q(3.0, 0.0) == 1.0
