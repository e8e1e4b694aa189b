"""
Security-parameter engine.

Closed-form quantities of the Gaussian de Finetti reduction: the energy-test
slack factor g, the photon cutoff K, the optimal radius eta*, the volume
T(n, eta), the de Finetti error, the composed security parameter and the key
reduction, plus a block-length solver built on top of them.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Union

from ..enhancements.logging import get_logger
from .exceptions import (
    DefinettiInapplicableError,
    GdfError,
    ParameterDomainError,
    PreconditionError,
    TestModesTooFewError,
    UnachievableTargetError,
)
from .mathkit import LogReal, rel_entropy

logger = get_logger(__name__)

LN2 = math.log(2.0)
N_STAR_FLOOR = 38
ENVELOPE_MIN_N = 38
MAX_BLOCKLENGTH = 2 ** 60

EpsLike = Union[LogReal, float]


def _as_eps(name: str, value: EpsLike, allow_zero: bool = False) -> LogReal:
    eps = LogReal.coerce(value)
    lower_ok = eps >= 0 if allow_zero else eps > 0
    if not (lower_ok and eps < 1):
        expected = "[0, 1)" if allow_zero else "(0, 1)"
        raise ParameterDomainError(name, float(eps), f"a value in {expected}")
    return eps


@dataclass(frozen=True)
class ProtocolInput:
    """Inputs of the reduction: block sizes, test thresholds and error budgets."""

    n: int
    k: int
    d_A: float
    d_B: float
    eps_coll: LogReal
    eps_test: LogReal

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError("n", self.n, "an integer >= 1")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterDomainError("k", self.k, "an integer >= 1")
        for name in ("d_A", "d_B"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterDomainError(name, value, "a positive photon number per mode")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "eps_coll", _as_eps("eps_coll", self.eps_coll, allow_zero=True))
        object.__setattr__(self, "eps_test", _as_eps("eps_test", self.eps_test))


@dataclass(frozen=True)
class DerivedParams:
    """Every derived security quantity for one ProtocolInput."""

    n: int
    k: int
    g: float
    dprime_A: float
    dprime_B: float
    K: int
    N: int
    eta_star: float
    T: float
    eps_definetti: LogReal
    eps_definetti_vacuous: bool
    eps_prime: LogReal
    eps_prime_main: LogReal
    eps_prime_envelope: LogReal
    key_reduction_bits: int
    n_star: int
    feasible: bool
    envelope_applicable: bool
    definetti_precondition_met: bool
    K_raised: bool
    flags: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Plain dictionary with LogReal values expanded for reports."""
        data: Dict[str, Any] = {}
        for key in self.__dataclass_fields__:
            value = getattr(self, key)
            if isinstance(value, LogReal):
                value = value.to_dict()
            data[key] = value
        data["eps_prime_exact"] = data.pop("eps_prime")
        return data


def is_vacuous(eps: LogReal) -> bool:
    """A bound is vacuous once it reaches 1."""
    return eps >= 1


def g_factor(n: int, k: int, eps: EpsLike) -> float:
    """Energy-test slack d'/d = g(n, k, eps).

    Raises:
        TestModesTooFewError: if k <= 2 ln(2/eps), where the denominator vanishes
    """
    if n < 1 or k < 1:
        raise ParameterDomainError("n, k", (n, k), "both >= 1")
    eps = _as_eps("eps", eps)
    log_term = LN2 - eps.log_magnitude
    denominator = 1.0 - 2.0 * math.sqrt(log_term / (2.0 * k))
    if denominator <= 0.0:
        raise TestModesTooFewError(k, 2.0 * log_term)
    numerator = 1.0 + 2.0 * math.sqrt(log_term / (2.0 * n)) + log_term / n
    return numerator / denominator


def photon_cutoff_K(params: ProtocolInput) -> int:
    """K = max(1, ceil(n (d_A + d_B) g(n, k, eps_test/4)))."""
    g = g_factor(params.n, params.k, params.eps_test / 4)
    return max(1, math.ceil(params.n * (params.d_A + params.d_B) * g))


def eta_star(n: int, K: int) -> float:
    """eta* = (K-n+5)/(K+n-5), the radius with (1+eta)/(1-eta) = K/(n-5)."""
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6")
    if K < n - 5:
        raise PreconditionError("eta_star", "K >= n-5", {"n": n, "K": K})
    return (K - n + 5) / (K + n - 5)


def volume_T(n: int, eta: float) -> float:
    """T(n, eta) = (n-1)(n-2)^2(n-3) eta^4 / (12 (1-eta)^4)."""
    if n < 4:
        raise ParameterDomainError("n", n, ">= 4")
    if not (0.0 <= eta < 1.0):
        raise ParameterDomainError("eta", eta, "a value in [0, 1)")
    return (n - 1) * (n - 2) ** 2 * (n - 3) * eta ** 4 / (12.0 * (1.0 - eta) ** 4)


def volume_T_upper(n: int, K: int) -> float:
    """Upper bound n^4 K^4 / (192 (n-5)^4) on T(n, eta*(n, K))."""
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6")
    return n ** 4 * float(K) ** 4 / (192.0 * (n - 5) ** 4)


def definetti_epsilon(n: int, K: int, eta: float, strict: bool = True) -> LogReal:
    """Error of the finite-energy de Finetti bound, 2N^4(1+K/N)^7 exp(-N D(K/(K+N) || eta)).

    Args:
        n: Number of modes per party (N = n-5)
        K: Photon cutoff
        eta: Radius of the integration domain
        strict: Raise when K exceeds eta N/(1-eta); otherwise evaluate anyway

    Raises:
        PreconditionError: if ``strict`` and K > eta N / (1 - eta)
    """
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6 so that N = n-5 >= 1")
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    if not (0.0 <= eta < 1.0):
        raise ParameterDomainError("eta", eta, "a value in [0, 1)")
    N = n - 5
    limit = eta * N / (1.0 - eta)
    if strict and K > limit * (1.0 + 1e-12) + 1e-12:
        raise PreconditionError(
            "definetti_epsilon",
            "K exceeds eta N/(1-eta)",
            {"n": n, "K": K, "eta": eta, "limit": limit},
        )
    x = K / (K + N)
    divergence = rel_entropy(x, eta)
    log_value = LN2 + 4.0 * math.log(N) + 7.0 * math.log1p(K / N) - N * divergence
    eps = LogReal.from_log(log_value)
    if is_vacuous(eps):
        logger.debug("de Finetti bound is vacuous", extra={"n": n, "K": K, "eta": eta})
    return eps


def definetti_epsilon_pinsker(n: int, K: int, printed: bool = False) -> LogReal:
    """Pinsker-weakened de Finetti error 2(N+K)^7/N^3 exp(-2N^3/(N+K)^2).

    ``printed=True`` divides the exponent by ln 2 as in the base-2 display;
    that variant is not an upper bound in nats and is only reported.
    """
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6")
    N = n - 5
    exponent = 2.0 * N ** 3 / (N + K) ** 2
    if printed:
        exponent /= LN2
    return LogReal.from_log(LN2 + 7.0 * math.log(N + K) - 3.0 * math.log(N) - exponent)


def definetti_epsilon_exact(n: int, K: int, eta: float) -> LogReal:
    """Largest excluded block mass max_{k<=K} tr(Pi_k (1 - P_eta)).

    This is the per-block error before the Chernoff step and holds for any
    eta; cost grows quadratically in K.
    """
    from .coherent import block_mass_outside

    worst = LogReal.zero()
    for block in range(K + 1):
        worst = max(worst, block_mass_outside(n, block, eta))
    return worst


def _n_star_log_lhs(N: int, alpha: float) -> float:
    return (
        LN2
        + 7.0 * math.log1p(alpha)
        + 4.0 * math.log(N)
        - 2.0 * N / ((1.0 + alpha) ** 2 * LN2)
    )


def N_star(alpha: float) -> int:
    """max(38, smallest N with 2(1+alpha)^7 N^4 exp(-2N/((1+alpha)^2 ln 2)) <= 1/2)."""
    if not alpha >= 1:
        raise ParameterDomainError("alpha", alpha, ">= 1")
    target = -LN2

    def satisfied(N: int) -> bool:
        return _n_star_log_lhs(N, alpha) <= target

    # the left side is concave in N and starts above the target
    lo, hi = 0, 1
    while not satisfied(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if satisfied(mid):
            hi = mid
        else:
            lo = mid
    return max(N_STAR_FLOOR, hi)


def key_reduction_bits(K: int) -> int:
    """ceil(2 log2 C(K+4, 4)), computed exactly on integers."""
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    squared = math.comb(K + 4, 4) ** 2
    return (squared - 1).bit_length()


def main_theorem_epsilon(eps_coll: EpsLike, T: float, eps_test: EpsLike) -> LogReal:
    """2 T eps_coll + eps_test, the form quoted alongside 2 eps_coll (T+1)."""
    return 2 * LogReal.coerce(eps_coll) * LogReal.from_float(T) + LogReal.coerce(eps_test)


def compose_security(params: ProtocolInput, strict: bool = False) -> DerivedParams:
    """Derive every security quantity for one protocol input.

    The cutoff is raised to n-5 when the energy test yields less (any larger
    cutoff is admissible), and the de Finetti error is evaluated at eta*. When
    eta* is 0 the divergence is infinite and the Pinsker form is reported
    instead; ``flags["eps_definetti_form"]`` names the form used.

    Args:
        params: Protocol input
        strict: Raise DefinettiInapplicableError when n-5 < N*(K/(n-5))

    Returns:
        DerivedParams with both composition paths and feasibility flags
    """
    n = params.n
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6")
    g = g_factor(n, params.k, params.eps_test / 4)
    K_test = photon_cutoff_K(params)
    N = n - 5
    K = max(K_test, N)
    eta = eta_star(n, K)
    T = volume_T(n, eta)
    alpha = K / N
    n_star = N_star(alpha)
    feasible = N >= n_star

    precondition_met = K <= eta * N / (1.0 - eta)
    eps_definetti = definetti_epsilon(n, K, eta, strict=False)
    eps_form = "chernoff"
    if eps_definetti.is_zero:
        # eta* = 0: D(K/(K+N) || 0) is infinite, which says nothing about the state
        eps_definetti = definetti_epsilon_pinsker(n, K)
        eps_form = "pinsker"

    eps_coll = params.eps_coll
    eps_prime = 2 * eps_coll * (LogReal.from_float(T) + 1) + params.eps_test
    envelope = LogReal.from_log(4.0 * math.log(K) - math.log(50.0)) * eps_coll + params.eps_test

    derived = DerivedParams(
        n=n,
        k=params.k,
        g=g,
        dprime_A=g * params.d_A,
        dprime_B=g * params.d_B,
        K=K,
        N=N,
        eta_star=eta,
        T=T,
        eps_definetti=eps_definetti,
        eps_definetti_vacuous=is_vacuous(eps_definetti),
        eps_prime=eps_prime,
        eps_prime_main=main_theorem_epsilon(eps_coll, T, params.eps_test),
        eps_prime_envelope=envelope,
        key_reduction_bits=key_reduction_bits(K),
        n_star=n_star,
        feasible=feasible,
        envelope_applicable=n >= ENVELOPE_MIN_N,
        definetti_precondition_met=precondition_met,
        K_raised=K > K_test,
        flags={"alpha": alpha, "K_from_test": K_test, "eps_definetti_form": eps_form},
    )

    logger.info(
        "Composed security parameters",
        extra={"n": n, "K": K, "feasible": feasible, "eps_prime": float(eps_prime)},
    )
    if strict and not feasible:
        raise DefinettiInapplicableError(n, n_star, alpha)
    return derived


def _first_true(predicate: Callable[[int], bool], start: int, n_max: int) -> Optional[int]:
    """Smallest n >= start with predicate(n), by doubling then bisection."""
    if predicate(start):
        return start
    lo, hi = start, start + 1
    while not predicate(hi):
        if hi >= n_max:
            return None
        lo, hi = hi, min(n_max, start + 2 * (hi - start))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _input_for(n: int, k_ratio: float, d_A: float, d_B: float,
               eps_coll: EpsLike, eps_test: EpsLike) -> ProtocolInput:
    return ProtocolInput(
        n=n,
        k=max(1, math.ceil(k_ratio * n)),
        d_A=d_A,
        d_B=d_B,
        eps_coll=eps_coll,
        eps_test=eps_test,
    )


def minimum_legal_n(k_ratio: float, d_A: float, d_B: float, eps_test: EpsLike,
                    n_max: int = MAX_BLOCKLENGTH) -> int:
    """Smallest n for which the energy test is defined and the reduction applies."""

    def legal(n: int) -> bool:
        try:
            return compose_security(_input_for(n, k_ratio, d_A, d_B, 0.0, eps_test)).feasible
        except GdfError:
            return False

    found = _first_true(legal, 6, n_max)
    if found is None:
        raise UnachievableTargetError(1.0, n_max)
    return found


def min_blocklength(
    target_eps_prime: EpsLike,
    k_ratio: float,
    d_A: float,
    d_B: float,
    eps_coll_of_n: Callable[[int], EpsLike],
    eps_test: Optional[EpsLike] = None,
    n_max: int = MAX_BLOCKLENGTH,
) -> int:
    """Smallest block length whose composed eps' is at most the target.

    Args:
        target_eps_prime: Required overall security parameter
        k_ratio: Test modes per key mode (k = ceil(k_ratio n))
        d_A: Alice's energy-test threshold
        d_B: Bob's energy-test threshold
        eps_coll_of_n: Collective-attack security parameter as a function of n
        eps_test: Energy-test budget (defaults to half the target)
        n_max: Search limit

    Raises:
        UnachievableTargetError: if no n <= n_max works
    """
    target = LogReal.coerce(target_eps_prime)
    if not target > 0:
        raise ParameterDomainError("target_eps_prime", float(target), "positive")
    if k_ratio <= 0:
        raise ParameterDomainError("k_ratio", k_ratio, "positive")
    if eps_test is None:
        eps_test = min(target, LogReal.from_float(0.5)) / 2
    eps_test = LogReal.coerce(eps_test)

    def achieves(n: int) -> bool:
        try:
            derived = compose_security(
                _input_for(n, k_ratio, d_A, d_B, eps_coll_of_n(n), eps_test)
            )
        except GdfError:
            return False
        return derived.feasible and derived.eps_prime <= target

    found = _first_true(achieves, 6, n_max)
    if found is None:
        raise UnachievableTargetError(float(target), n_max)
    logger.info("Minimum block length found", extra={"n": found, "target": float(target)})
    return found
