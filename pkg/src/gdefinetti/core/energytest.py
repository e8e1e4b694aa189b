"""
Monte-Carlo simulator of the energy test T(k, d_A, d_B).

Alice and Bob hold n + k modes each, apply one common random rotation (u on
Alice's data, conj(u) on Bob's), heterodyne the last k modes and accept iff the
measured energies stay below k d_A and k d_B. The simulated failure event is
the classical surrogate used in the security proof: the test passes while the
remaining n modes still carry at least n d' photons.

Heterodyne convention: on a thermal mode with mean photon number m the outcome
alpha is circular Gaussian with E|alpha|^2 = m + 1.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import stats

from ..enhancements.logging import PerformanceLogger, get_logger
from .config import config
from .exceptions import DimensionMismatchError, ParameterDomainError
from .mathkit import LogReal, chi2_tail_bounds, chi2_tail_exact
from .montecarlo import (
    SeedLike,
    as_generator,
    complex_normal,
    complex_wishart_2x2,
    haar_frame,
    haar_unitary,
    run_batches,
    spawn_generators,
    split_counts,
    wilson_interval,
)
from .params import EpsLike, LN2, _as_eps, g_factor

logger = get_logger(__name__)

SIGMA_MARGIN = 3.0
# below this many expected events the Monte-Carlo verdict is not informative
MIN_EXPECTED_EVENTS = 10
# explicit per-mode simulation is used up to this many complex entries per side
EXPLICIT_ENTRY_LIMIT = 200_000_000
MAX_CHUNK_ENTRIES = 4_000_000
MODELS = ("thermal", "adversarial")
METHODS = ("auto", "explicit", "gram")


@dataclass(frozen=True)
class TestParams:
    """Block sizes and per-mode energy thresholds of the test."""

    __test__ = False

    n: int
    k: int
    d_A: float
    d_B: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError("n", self.n, "an integer >= 1")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterDomainError("k", self.k, "an integer >= 1")
        for name in ("d_A", "d_B"):
            value = getattr(self, name)
            if not value > 0 or math.isinf(value):
                raise ParameterDomainError(name, value, "a positive finite number")

    @property
    def modes(self) -> int:
        return self.n + self.k


@dataclass(frozen=True)
class HeterodyneRecord:
    """Heterodyne amplitudes of Alice's and Bob's n + k modes."""

    alice: np.ndarray
    bob: np.ndarray

    def __post_init__(self) -> None:
        alice = np.asarray(self.alice, dtype=complex)
        bob = np.asarray(self.bob, dtype=complex)
        if alice.ndim != 1 or alice.shape != bob.shape:
            raise DimensionMismatchError(alice.shape, bob.shape, "heterodyne record")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    def __len__(self) -> int:
        return self.alice.shape[0]


@dataclass(frozen=True)
class TestOutcome:
    """Verdict of one run with the measured and remaining energies."""

    __test__ = False

    passed: bool
    Y_A: float
    Y_B: float
    Y_rem_A: float
    Y_rem_B: float


def sample_iid_heterodyne(mean_photons: float, modes: int, rng: SeedLike = None) -> np.ndarray:
    """Heterodyne outcomes of ``modes`` i.i.d. thermal modes (E|alpha|^2 = mean_photons + 1)."""
    if not mean_photons >= 0:
        raise ParameterDomainError("mean_photons", mean_photons, ">= 0")
    if modes < 1:
        raise ParameterDomainError("modes", modes, ">= 1")
    return complex_normal(as_generator(rng), (modes,), mean_photons + 1.0)


def _rotate_frame(alpha: np.ndarray, beta: np.ndarray, rng: np.random.Generator
                  ) -> Tuple[np.ndarray, np.ndarray]:
    # Haar u acts on span(alpha, conj(beta)) only through the first two columns of u
    e1, e2 = haar_frame(alpha.shape[1], rng, alpha.shape[0])
    norm_a = np.linalg.norm(alpha, axis=1, keepdims=True)
    norm_b = np.linalg.norm(beta, axis=1, keepdims=True)
    safe_a = np.where(norm_a > 0, norm_a, 1.0)
    safe_b = np.where(norm_b > 0, norm_b, 1.0)
    alpha_hat = alpha / safe_a
    beta_bar_hat = np.conj(beta) / safe_b
    c = np.sum(np.conj(alpha_hat) * beta_bar_hat, axis=1, keepdims=True)
    c = np.where(norm_a > 0, c, 0.0)
    s = np.sqrt(np.clip(1.0 - np.abs(c) ** 2, 0.0, None))
    rotated_alpha = norm_a * e1
    rotated_beta_bar = norm_b * (c * e1 + s * e2)
    return rotated_alpha, np.conj(rotated_beta_bar)


def _rotate_full(alpha: np.ndarray, beta: np.ndarray, rng: np.random.Generator
                 ) -> Tuple[np.ndarray, np.ndarray]:
    u = haar_unitary(alpha.shape[1], rng, alpha.shape[0])
    rotated_alpha = np.einsum("sij,sj->si", u, alpha)
    rotated_beta = np.einsum("sij,sj->si", np.conj(u), beta)
    return rotated_alpha, rotated_beta


def symmetrize(record: HeterodyneRecord, rng: SeedLike = None, method: str = "frame") -> HeterodyneRecord:
    """alpha -> u alpha and beta -> conj(u) beta for one Haar-random u in U(n+k).

    ``method="full"`` draws the whole unitary; ``"frame"`` draws only the
    two columns u actually uses on span(alpha, conj(beta)), which gives the
    same output distribution at O(n+k) cost.
    """
    rng = as_generator(rng)
    alpha = record.alice[None, :]
    beta = record.bob[None, :]
    if len(record) == 1 or method == "full":
        rotated = _rotate_full(alpha, beta, rng)
    elif method == "frame":
        rotated = _rotate_frame(alpha, beta, rng)
    else:
        raise ParameterDomainError("method", method, "'frame' or 'full'")
    return HeterodyneRecord(alice=rotated[0][0], bob=rotated[1][0])


def _energies(amplitudes: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    # (last k modes, first n modes)
    weights = np.abs(amplitudes) ** 2
    return weights[..., n:].sum(axis=-1), weights[..., :n].sum(axis=-1)


def run_test(record: HeterodyneRecord, params: TestParams) -> TestOutcome:
    """Energy test on the last k modes; thresholds are inclusive."""
    if len(record) != params.modes:
        raise DimensionMismatchError(params.modes, len(record), "heterodyne record length")
    Y_A, Y_rem_A = _energies(record.alice, params.n)
    Y_B, Y_rem_B = _energies(record.bob, params.n)
    passed = bool(Y_A <= params.k * params.d_A and Y_B <= params.k * params.d_B)
    return TestOutcome(
        passed=passed, Y_A=float(Y_A), Y_B=float(Y_B), Y_rem_A=float(Y_rem_A), Y_rem_B=float(Y_rem_B)
    )


@dataclass
class Lemma36Estimate:
    """Estimate of Pr[k d Z_n >= n d' Z_k] for independent Z_n ~ chi2(2n), Z_k ~ chi2(2k)."""

    n: int
    k: int
    d: float
    d_prime: float
    g: float
    eps: LogReal
    trials: int
    events: int
    ci_low: float
    ci_high: float
    exact: LogReal
    chain_bound: LogReal
    chain_exact: LogReal
    mode: str
    passed: bool

    @property
    def estimate(self) -> float:
        return self.events / self.trials

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "d": self.d,
            "d_prime": self.d_prime,
            "g": self.g,
            "eps": self.eps.to_dict(),
            "trials": self.trials,
            "events": self.events,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "exact": self.exact.to_dict(),
            "chain_bound": self.chain_bound.to_dict(),
            "chain_exact": self.chain_exact.to_dict(),
            "mode": self.mode,
            "passed": self.passed,
        }


def _batched_counts(trials: int, rng: SeedLike, batches: Optional[int], threads: Optional[int], count_fn) -> int:
    if trials < 1:
        raise ParameterDomainError("trials", trials, ">= 1")
    batches = min(batches or config.get("batches"), trials)
    threads = threads or config.get_threads()
    counts = split_counts(trials, batches)
    generators = spawn_generators(rng, batches)
    results = run_batches(lambda i, generator: count_fn(counts[i], generator), generators, threads)
    return int(sum(results))


def lemma36_probability(
    n: int,
    k: int,
    d: float,
    eps: EpsLike,
    trials: int,
    rng: SeedLike = None,
    batches: Optional[int] = None,
    threads: Optional[int] = None,
) -> Lemma36Estimate:
    """Monte-Carlo and exact evaluation of the chi-square event behind the test bound.

    With d' = g(n, k, eps) d, the event probability equals
    Pr[F(2n, 2k) >= d'/d]. The analytic chain bounds it by
    Pr[Z_n >= 2n + 2 sqrt(2n x) + 2x] + Pr[Z_k <= 2k - 2 sqrt(2k x)] with
    x = ln(2/eps); each term is at most eps/2. When eps * trials is below
    MIN_EXPECTED_EVENTS the verdict comes from the chain ("analytic" mode),
    otherwise from p_hat <= eps + 3 sqrt(eps(1-eps)/trials).

    Raises:
        TestModesTooFewError: if k <= 2 ln(2/eps)
    """
    eps = _as_eps("eps", eps)
    if not d > 0:
        raise ParameterDomainError("d", d, "> 0")
    g = g_factor(n, k, eps)
    d_prime = g * d
    chunk_size = config.get("chunk_size")

    def count_events(count: int, generator: np.random.Generator) -> int:
        events = 0
        remaining = count
        while remaining > 0:
            size = min(chunk_size, remaining)
            z_n = generator.chisquare(2 * n, size)
            z_k = generator.chisquare(2 * k, size)
            events += int(np.count_nonzero(k * d * z_n >= n * d_prime * z_k))
            remaining -= size
        return events

    with PerformanceLogger("lemma36_probability", logger, samples=trials):
        events = _batched_counts(trials, rng, batches, threads, count_events)

    x = LN2 - eps.log_magnitude
    bounds_n = chi2_tail_bounds(2 * n, x)
    bounds_k = chi2_tail_bounds(2 * k, x)
    chain_bound = bounds_n.upper_probability + bounds_k.lower_probability
    chain_exact = chi2_tail_exact(2 * n, bounds_n.upper_threshold, upper=True) + chi2_tail_exact(
        2 * k, bounds_k.lower_threshold, upper=False
    )
    exact = LogReal.from_log(float(stats.f.logsf(g, 2 * n, 2 * k)))
    ci_low, ci_high = wilson_interval(events, trials, SIGMA_MARGIN)

    eps_value = float(eps)
    if eps_value * trials < MIN_EXPECTED_EVENTS:
        mode = "analytic"
        passed = exact <= chain_exact and chain_exact <= eps
    else:
        mode = "monte_carlo"
        margin = SIGMA_MARGIN * math.sqrt(eps_value * (1.0 - eps_value) / trials)
        passed = events / trials <= eps_value + margin
    logger.info(
        "Chi-square event estimate",
        extra={"n": n, "k": k, "trials": trials, "events": events, "mode": mode, "passed": passed},
    )
    return Lemma36Estimate(
        n=n,
        k=k,
        d=d,
        d_prime=d_prime,
        g=g,
        eps=eps,
        trials=trials,
        events=events,
        ci_low=ci_low,
        ci_high=ci_high,
        exact=exact,
        chain_bound=chain_bound,
        chain_exact=chain_exact,
        mode=mode,
        passed=passed,
    )


def _model_variances(params: TestParams, mean_photons: float, model: str) -> Tuple[float, float]:
    """Heterodyne variances (first n modes, last k modes) of one side."""
    if model == "thermal":
        return mean_photons + 1.0, mean_photons + 1.0
    if model == "adversarial":
        return mean_photons * params.modes / params.n + 1.0, 1.0
    raise ParameterDomainError("model", model, f"one of {MODELS}")


def _sample_explicit(params: TestParams, variances_A, variances_B, size: int,
                     rng: np.random.Generator) -> Dict[str, np.ndarray]:
    n, k = params.n, params.k
    scale_A = np.concatenate([np.full(n, variances_A[0]), np.full(k, variances_A[1])])
    scale_B = np.concatenate([np.full(n, variances_B[0]), np.full(k, variances_B[1])])
    alpha = complex_normal(rng, (size, params.modes), scale_A)
    beta = complex_normal(rng, (size, params.modes), scale_B)
    alpha, beta = _rotate_frame(alpha, beta, rng)
    Y_A, Y_rem_A = _energies(alpha, n)
    Y_B, Y_rem_B = _energies(beta, n)
    return {"Y_A": Y_A, "Y_B": Y_B, "Y_rem_A": Y_rem_A, "Y_rem_B": Y_rem_B}


def _input_gram(params: TestParams, variances_A, variances_B, size: int,
                rng: np.random.Generator) -> np.ndarray:
    # Gram matrix of (alpha, conj(beta)) before the rotation
    first = np.sqrt(np.array([variances_A[0], variances_B[0]]))
    last = np.sqrt(np.array([variances_A[1], variances_B[1]]))
    W_first = complex_wishart_2x2(rng, params.n, size)
    W_last = complex_wishart_2x2(rng, params.k, size)
    return first[:, None] * W_first * first[None, :] + last[:, None] * W_last * last[None, :]


def _frame_gram_last(params: TestParams, size: int, rng: np.random.Generator) -> np.ndarray:
    # Gram of the Haar 2-frame (e1, e2) restricted to the last k coordinates
    W_last = complex_wishart_2x2(rng, params.k, size)
    W_first = complex_wishart_2x2(rng, params.n, size)
    lower = np.linalg.cholesky(W_last + W_first)
    left = np.linalg.solve(lower, W_last)
    return np.conj(np.swapaxes(np.linalg.solve(lower, np.conj(np.swapaxes(left, 1, 2))), 1, 2))


def _sample_gram(params: TestParams, variances_A, variances_B, size: int,
                 rng: np.random.Generator) -> Dict[str, np.ndarray]:
    V = _input_gram(params, variances_A, variances_B, size, rng)
    P = _frame_gram_last(params, size, rng)
    norm_a2 = V[:, 0, 0].real
    norm_b2 = V[:, 1, 1].real
    c = V[:, 0, 1] / np.sqrt(norm_a2 * norm_b2)
    s = np.sqrt(np.clip(1.0 - np.abs(c) ** 2, 0.0, None))
    P11 = P[:, 0, 0].real
    P22 = P[:, 1, 1].real
    P12 = P[:, 0, 1]
    fraction_B = np.abs(c) ** 2 * P11 + s ** 2 * P22 + 2.0 * s * np.real(np.conj(c) * P12)
    Y_A = norm_a2 * P11
    Y_B = norm_b2 * np.clip(fraction_B, 0.0, 1.0)
    return {"Y_A": Y_A, "Y_B": Y_B, "Y_rem_A": norm_a2 - Y_A, "Y_rem_B": norm_b2 - Y_B}


def _resolve_method(method: str, params: TestParams, trials: int) -> str:
    if method not in METHODS:
        raise ParameterDomainError("method", method, f"one of {METHODS}")
    if method != "auto":
        return method
    return "explicit" if params.modes * trials <= EXPLICIT_ENTRY_LIMIT else "gram"


@dataclass
class FailureEstimate:
    """Empirical rate of (test passes) and (remaining energy >= n d') with its 3-sigma Wilson interval."""

    params: TestParams
    model: str
    method: str
    mean_photons_A: float
    mean_photons_B: float
    eps_test: LogReal
    d_prime_A: float
    d_prime_B: float
    trials: int
    failures: int
    ci_low: float
    ci_high: float

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def passed(self) -> bool:
        return self.ci_high <= float(self.eps_test)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.params.n,
            "k": self.params.k,
            "d_A": self.params.d_A,
            "d_B": self.params.d_B,
            "model": self.model,
            "method": self.method,
            "mean_photons_A": self.mean_photons_A,
            "mean_photons_B": self.mean_photons_B,
            "eps_test": self.eps_test.to_dict(),
            "d_prime_A": self.d_prime_A,
            "d_prime_B": self.d_prime_B,
            "trials": self.trials,
            "failures": self.failures,
            "rate": self.rate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "passed": self.passed,
        }


def failure_event_estimate(
    params: TestParams,
    mean_photons,
    eps_test: EpsLike,
    trials: int,
    rng: SeedLike = None,
    model: str = "thermal",
    method: str = "auto",
    batches: Optional[int] = None,
    threads: Optional[int] = None,
) -> FailureEstimate:
    """Run sample, symmetrize and test ``trials`` times and count failure events.

    A failure is a passing test with Y_rem_A >= n d'_A or Y_rem_B >= n d'_B,
    where d' = g(n, k, eps_test/4) d. ``mean_photons`` is one value or an
    (Alice, Bob) pair. In the "adversarial" model all energy of a side sits in
    its first n modes before the rotation. ``method="gram"`` samples only the
    2x2 Gram matrices the energies depend on (complex Bartlett factors);
    ``"explicit"`` simulates every mode.
    """
    eps_test = _as_eps("eps_test", eps_test)
    if np.ndim(mean_photons) == 0:
        mean_A = mean_B = float(mean_photons)
    else:
        mean_A, mean_B = (float(v) for v in mean_photons)
    for name, value in (("mean_photons_A", mean_A), ("mean_photons_B", mean_B)):
        if not value >= 0:
            raise ParameterDomainError(name, value, ">= 0")
    if trials < 1:
        raise ParameterDomainError("trials", trials, ">= 1")
    g = g_factor(params.n, params.k, eps_test / 4)
    d_prime_A, d_prime_B = g * params.d_A, g * params.d_B
    variances_A = _model_variances(params, mean_A, model)
    variances_B = _model_variances(params, mean_B, model)
    method = _resolve_method(method, params, trials)
    sampler = _sample_explicit if method == "explicit" else _sample_gram
    rows = max(1, min(config.get("chunk_size"), MAX_CHUNK_ENTRIES // params.modes))

    def count_failures(count: int, generator: np.random.Generator) -> int:
        failures = 0
        remaining = count
        while remaining > 0:
            size = min(rows, remaining)
            energies = sampler(params, variances_A, variances_B, size, generator)
            passed = (energies["Y_A"] <= params.k * params.d_A) & (energies["Y_B"] <= params.k * params.d_B)
            heavy = (energies["Y_rem_A"] >= params.n * d_prime_A) | (energies["Y_rem_B"] >= params.n * d_prime_B)
            failures += int(np.count_nonzero(passed & heavy))
            remaining -= size
        return failures

    with PerformanceLogger("failure_event_estimate", logger, samples=trials):
        failures = _batched_counts(trials, rng, batches, threads, count_failures)
    ci_low, ci_high = wilson_interval(failures, trials, SIGMA_MARGIN)
    estimate = FailureEstimate(
        params=params,
        model=model,
        method=method,
        mean_photons_A=mean_A,
        mean_photons_B=mean_B,
        eps_test=eps_test,
        d_prime_A=d_prime_A,
        d_prime_B=d_prime_B,
        trials=trials,
        failures=failures,
        ci_low=ci_low,
        ci_high=ci_high,
    )
    logger.info(
        "Energy-test failure estimate",
        extra={"model": model, "method": method, "trials": trials, "failures": failures},
    )
    return estimate


def energy_fraction_sample(n: int, k: int, mean_photons: float, trials: int, rng: SeedLike = None,
                           model: str = "thermal", method: str = "explicit") -> np.ndarray:
    """Samples of Y_k / Y_total for Alice after symmetrization; Beta(k, n) distributed."""
    params = TestParams(n=n, k=k, d_A=1.0, d_B=1.0)
    if trials < 1:
        raise ParameterDomainError("trials", trials, ">= 1")
    if method not in ("explicit", "gram"):
        raise ParameterDomainError("method", method, "'explicit' or 'gram'")
    generator = as_generator(rng)
    variances = _model_variances(params, mean_photons, model)
    sampler = _sample_explicit if method == "explicit" else _sample_gram
    energies = sampler(params, variances, variances, trials, generator)
    return energies["Y_A"] / (energies["Y_A"] + energies["Y_rem_A"])


__all__ = [
    "TestParams",
    "HeterodyneRecord",
    "TestOutcome",
    "Lemma36Estimate",
    "FailureEstimate",
    "sample_iid_heterodyne",
    "symmetrize",
    "run_test",
    "lemma36_probability",
    "failure_event_estimate",
    "energy_fraction_sample",
]
