"""
Tests for the energy-test simulator.
"""

import math

import numpy as np
import pytest
from scipy import stats

from gdefinetti.core.exceptions import DimensionMismatchError, ParameterDomainError, TestModesTooFewError
from gdefinetti.core.energytest import (
    HeterodyneRecord,
    TestParams,
    energy_fraction_sample,
    failure_event_estimate,
    lemma36_probability,
    run_test,
    sample_iid_heterodyne,
    symmetrize,
)


def thermal_record(rng, modes, mean_photons=1.0):
    return HeterodyneRecord(
        alice=sample_iid_heterodyne(mean_photons, modes, rng),
        bob=sample_iid_heterodyne(mean_photons, modes, rng),
    )


class TestHeterodyneSampling:
    """Test i.i.d. heterodyne outcomes."""

    def test_variance_is_mean_photons_plus_one(self, rng):
        samples = sample_iid_heterodyne(2.0, 100_000, rng)
        energies = np.abs(samples) ** 2
        sigma = energies.std() / math.sqrt(energies.size)
        assert abs(energies.mean() - 3.0) <= 5 * sigma

    def test_domain(self, rng):
        with pytest.raises(ParameterDomainError):
            sample_iid_heterodyne(-0.5, 10, rng)
        with pytest.raises(ParameterDomainError):
            sample_iid_heterodyne(1.0, 0, rng)

    def test_record_shapes_must_match(self):
        with pytest.raises(DimensionMismatchError):
            HeterodyneRecord(alice=np.zeros(3), bob=np.zeros(4))


class TestSymmetrize:
    """Test the common random rotation of both records."""

    @pytest.mark.parametrize("method", ["frame", "full"])
    def test_conserved_quantities(self, rng, method):
        record = thermal_record(rng, 12)
        rotated = symmetrize(record, rng, method=method)
        assert np.linalg.norm(rotated.alice) == pytest.approx(np.linalg.norm(record.alice), abs=1e-10)
        assert np.linalg.norm(rotated.bob) == pytest.approx(np.linalg.norm(record.bob), abs=1e-10)
        # sum_i alpha_i beta_i is invariant under alpha -> u alpha, beta -> conj(u) beta
        before = np.sum(record.alice * record.bob)
        after = np.sum(rotated.alice * rotated.bob)
        assert abs(after - before) <= 1e-10

    def test_single_mode_record(self, rng):
        record = thermal_record(rng, 1)
        rotated = symmetrize(record, rng)
        assert abs(rotated.alice[0]) == pytest.approx(abs(record.alice[0]))

    def test_unknown_method(self, rng):
        with pytest.raises(ParameterDomainError):
            symmetrize(thermal_record(rng, 4), rng, method="half")


class TestRunTest:
    """Test the energy-test verdict."""

    def test_threshold_is_inclusive(self):
        params = TestParams(n=1, k=2, d_A=1.0, d_B=1.0)
        record = HeterodyneRecord(alice=np.array([5.0, 1.0, 1.0]), bob=np.array([0.0, 1.0, 1.0j]))
        outcome = run_test(record, params)
        assert outcome.passed
        assert outcome.Y_A == pytest.approx(2.0)
        assert outcome.Y_rem_A == pytest.approx(25.0)

    def test_fails_above_threshold(self):
        params = TestParams(n=1, k=2, d_A=0.99, d_B=1.0)
        record = HeterodyneRecord(alice=np.array([0.0, 1.0, 1.0]), bob=np.array([0.0, 0.0, 0.0]))
        assert not run_test(record, params).passed

    def test_length_must_match(self):
        params = TestParams(n=2, k=2, d_A=1.0, d_B=1.0)
        with pytest.raises(DimensionMismatchError):
            run_test(HeterodyneRecord(alice=np.zeros(3), bob=np.zeros(3)), params)

    @pytest.mark.parametrize("field,value", [("n", 0), ("k", 1.5), ("d_A", 0.0), ("d_B", math.inf)])
    def test_params_domain(self, field, value):
        values = dict(n=10, k=10, d_A=1.0, d_B=1.0)
        values[field] = value
        with pytest.raises(ParameterDomainError):
            TestParams(**values)


class TestChiSquareEvent:
    """Test the chi-square event estimate."""

    def test_monte_carlo_mode(self, small_batches):
        estimate = lemma36_probability(100, 100, 1.0, 0.05, 20_000, rng=1)
        assert estimate.mode == "monte_carlo"
        assert estimate.passed
        assert estimate.exact <= estimate.chain_exact <= estimate.chain_bound
        assert estimate.chain_bound <= 0.05 * (1 + 1e-12)

    def test_analytic_mode(self, small_batches):
        estimate = lemma36_probability(1000, 200, 2.5, 1e-6, 1_000, rng=2)
        assert estimate.mode == "analytic"
        assert estimate.passed

    def test_estimate_close_to_exact(self, small_batches):
        estimate = lemma36_probability(50, 50, 1.0, 0.2, 40_000, rng=3)
        assert abs(estimate.estimate - float(estimate.exact)) <= 5 * max(estimate.stderr, 1e-4)

    def test_serialization(self, small_batches):
        data = lemma36_probability(100, 100, 1.0, 0.05, 1_000, rng=4).to_dict()
        assert data["trials"] == 1_000
        assert set(data["exact"]) == {"value", "sign", "log_abs"}

    def test_too_few_test_modes(self, small_batches):
        with pytest.raises(TestModesTooFewError):
            lemma36_probability(100, 5, 1.0, 0.01, 100)


class TestFailureEstimate:
    """Test the simulated failure event of the energy test."""

    @pytest.mark.parametrize("model", ["thermal", "adversarial"])
    def test_failure_rate_below_epsilon(self, small_batches, model):
        params = TestParams(n=100, k=100, d_A=2.5, d_B=2.5)
        estimate = failure_event_estimate(params, 1.0, 0.05, 20_000, rng=5, model=model)
        assert estimate.method == "explicit"
        assert estimate.passed
        assert estimate.d_prime_A > params.d_A

    def test_gram_method_runs(self, small_batches):
        params = TestParams(n=100, k=100, d_A=2.5, d_B=2.5)
        estimate = failure_event_estimate(params, 1.0, 0.05, 20_000, rng=5, method="gram")
        assert estimate.method == "gram"
        assert estimate.passed

    def test_separate_mean_photons(self, small_batches):
        params = TestParams(n=50, k=50, d_A=3.0, d_B=4.0)
        estimate = failure_event_estimate(params, (1.0, 2.0), 0.1, 1_000, rng=6)
        assert (estimate.mean_photons_A, estimate.mean_photons_B) == (1.0, 2.0)

    def test_seed_determinism(self, small_batches):
        params = TestParams(n=30, k=30, d_A=1.5, d_B=1.5)
        first = failure_event_estimate(params, 0.5, 0.2, 2_000, rng=7)
        second = failure_event_estimate(params, 0.5, 0.2, 2_000, rng=7)
        assert first.failures == second.failures

    def test_argument_checks(self, small_batches):
        params = TestParams(n=100, k=100, d_A=2.5, d_B=2.5)
        with pytest.raises(ParameterDomainError):
            failure_event_estimate(params, 1.0, 0.05, 0)
        with pytest.raises(ParameterDomainError):
            failure_event_estimate(params, 1.0, 0.05, 10, model="coherent")
        with pytest.raises(ParameterDomainError):
            failure_event_estimate(params, 1.0, 0.05, 10, method="fast")
        with pytest.raises(ParameterDomainError):
            failure_event_estimate(params, -1.0, 0.05, 10)


class TestEnergyFraction:
    """The symmetrized test fraction Y_k / Y_total is Beta(k, n) distributed."""

    @pytest.mark.parametrize("method", ["explicit", "gram"])
    @pytest.mark.parametrize("model", ["thermal", "adversarial"])
    def test_beta_distribution(self, method, model):
        n, k = 20, 10
        fractions = energy_fraction_sample(n, k, 1.5, 4_000, rng=8, model=model, method=method)
        assert np.all((fractions >= 0) & (fractions <= 1))
        assert stats.kstest(fractions, stats.beta(k, n).cdf).pvalue > 1e-4
