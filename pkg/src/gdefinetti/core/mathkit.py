"""
Special functions and concentration bounds in log-domain.

Every probability or bound that leaves this module is a :class:`LogReal`, so
failure probabilities far below the float64 range (2^-128 and beyond) can be
combined without underflow. Relative entropies are in nats throughout.
"""

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from scipy import special, stats

from .exceptions import ParameterDomainError, PreconditionError

NEG_INF = float("-inf")
_MAX_LOG_FLOAT = math.log(np.finfo(float).max)

Number = Union[int, float]


@total_ordering
@dataclass(frozen=True, eq=False)
class LogReal:
    """A real number stored as ``sign * exp(log_magnitude)``.

    ``sign`` is -1, 0 or +1; zero is represented as ``(0, -inf)``.
    """

    sign: int
    log_magnitude: float

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise ParameterDomainError("sign", self.sign, "-1, 0 or +1")
        if math.isnan(self.log_magnitude):
            raise ParameterDomainError("log_magnitude", self.log_magnitude, "a number")
        if (self.sign == 0) != (self.log_magnitude == NEG_INF):
            raise ParameterDomainError(
                "log_magnitude", self.log_magnitude, "-inf exactly when sign is 0"
            )

    # -- construction ---------------------------------------------------

    @classmethod
    def zero(cls) -> "LogReal":
        return cls(0, NEG_INF)

    @classmethod
    def one(cls) -> "LogReal":
        return cls(1, 0.0)

    @classmethod
    def from_log(cls, log_magnitude: float, sign: int = 1) -> "LogReal":
        """Build from a natural log of the magnitude; ``-inf`` gives zero."""
        log_magnitude = float(log_magnitude)
        if sign == 0 or log_magnitude == NEG_INF:
            return cls.zero()
        return cls(1 if sign > 0 else -1, log_magnitude)

    @classmethod
    def from_float(cls, value: Number) -> "LogReal":
        value = float(value)
        if math.isnan(value):
            raise ParameterDomainError("value", value, "a number")
        if value == 0.0:
            return cls.zero()
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def coerce(cls, value: Union["LogReal", Number]) -> "LogReal":
        if isinstance(value, LogReal):
            return value
        if isinstance(value, (int, float, np.integer, np.floating)):
            return cls.from_float(float(value))
        raise TypeError(f"Cannot interpret {type(value).__name__} as LogReal")

    # -- inspection -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def log(self) -> float:
        """Natural log of the value; only defined for non-negative values."""
        if self.sign < 0:
            raise ParameterDomainError("value", float(self), "non-negative for log()")
        return self.log_magnitude

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_magnitude > _MAX_LOG_FLOAT:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_magnitude)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize as value plus (sign, ln|x|); non-finite entries become None."""
        value = float(self)
        return {
            "value": value if math.isfinite(value) else None,
            "sign": self.sign,
            "log_abs": None if self.sign == 0 else self.log_magnitude,
        }

    def __repr__(self) -> str:
        return f"LogReal({float(self):.6g}, sign={self.sign}, log_abs={self.log_magnitude:.6g})"

    # -- arithmetic -----------------------------------------------------

    def __neg__(self) -> "LogReal":
        return LogReal(-self.sign, self.log_magnitude)

    def __abs__(self) -> "LogReal":
        return LogReal(abs(self.sign), self.log_magnitude)

    def __add__(self, other: Union["LogReal", Number]) -> "LogReal":
        other = LogReal.coerce(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        if big.sign == small.sign:
            return LogReal(big.sign, float(np.logaddexp(big.log_magnitude, small.log_magnitude)))
        if big.log_magnitude == small.log_magnitude:
            return LogReal.zero()
        if big.log_magnitude == math.inf:
            return big
        diff = small.log_magnitude - big.log_magnitude
        return LogReal.from_log(big.log_magnitude + math.log1p(-math.exp(diff)), big.sign)

    def __radd__(self, other: Number) -> "LogReal":
        return self.__add__(other)

    def __sub__(self, other: Union["LogReal", Number]) -> "LogReal":
        return self.__add__(-LogReal.coerce(other))

    def __rsub__(self, other: Number) -> "LogReal":
        return LogReal.coerce(other).__add__(-self)

    def __mul__(self, other: Union["LogReal", Number]) -> "LogReal":
        other = LogReal.coerce(other)
        if self.sign == 0 or other.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    def __rmul__(self, other: Number) -> "LogReal":
        return self.__mul__(other)

    def __truediv__(self, other: Union["LogReal", Number]) -> "LogReal":
        other = LogReal.coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log_magnitude - other.log_magnitude)

    def __rtruediv__(self, other: Number) -> "LogReal":
        return LogReal.coerce(other).__truediv__(self)

    def __pow__(self, exponent: Number) -> "LogReal":
        if self.sign < 0:
            raise ParameterDomainError("base", float(self), "non-negative for real powers")
        if self.sign == 0:
            if exponent <= 0:
                raise ParameterDomainError("exponent", exponent, "positive for a zero base")
            return LogReal.zero()
        return LogReal.from_log(self.log_magnitude * float(exponent))

    # -- ordering -------------------------------------------------------

    def _compare(self, other: Union["LogReal", Number]) -> int:
        other = LogReal.coerce(other)
        if self.sign != other.sign:
            return 1 if self.sign > other.sign else -1
        if self.sign == 0 or self.log_magnitude == other.log_magnitude:
            return 0
        larger = self.log_magnitude > other.log_magnitude
        return (1 if larger else -1) * self.sign

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (LogReal, int, float, np.integer, np.floating)):
            return NotImplemented
        return self._compare(other) == 0  # type: ignore[arg-type]

    def __lt__(self, other: Union["LogReal", Number]) -> bool:
        return self._compare(other) < 0

    def __hash__(self) -> int:
        return hash((self.sign, self.log_magnitude))


def log_sum(log_terms: Sequence[float], signs: Optional[Sequence[float]] = None) -> LogReal:
    """Sum ``signs[i] * exp(log_terms[i])`` into a LogReal.

    Same-sign sums are accumulated with compensated summation after shifting
    by the largest term.
    """
    terms = np.asarray(log_terms, dtype=float)
    if terms.size == 0:
        return LogReal.zero()
    if signs is None:
        peak = float(np.max(terms))
        if peak == NEG_INF:
            return LogReal.zero()
        if peak == math.inf:
            return LogReal(1, math.inf)
        total = math.fsum(np.exp(terms - peak).tolist())
        return LogReal.from_log(peak + math.log(total))
    weights = np.asarray(signs, dtype=float)
    value, sign = special.logsumexp(terms, b=weights, return_sign=True)
    return LogReal.from_log(float(value), int(sign))


def log_binom(N: Union[int, np.ndarray], K: Union[int, np.ndarray]) -> Any:
    """ln C(N, K) via log-gamma (vectorized)."""
    return special.gammaln(np.add(N, 1)) - special.gammaln(np.add(K, 1)) - special.gammaln(
        np.subtract(N, K) + 1
    )


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ParameterDomainError(name, value, "a probability in [0, 1]")
    return value


def rel_entropy(x: float, y: float) -> float:
    """Binary relative entropy D(x||y) in nats, with 0 ln 0 = 0."""
    x = _check_probability("x", x)
    y = _check_probability("y", y)
    value = float(special.rel_entr(x, y) + special.rel_entr(1.0 - x, 1.0 - y))
    return max(0.0, value)


def pinsker_lower_bound(x: float, y: float) -> float:
    """Pinsker's lower bound 2(x-y)^2 on the relative entropy (nats)."""
    x = _check_probability("x", x)
    y = _check_probability("y", y)
    return 2.0 * (x - y) ** 2


def binom_tail_exact(K: int, N: int, p: float) -> LogReal:
    """Binomial CDF F(K, N, p) = Pr[Bin(N, p) <= K].

    Log-terms are summed from whichever tail holds less mass; the lower tail
    is returned directly and the upper one through ``log1p``. K below zero
    gives 0 and K at or above N gives 1.
    """
    p = _check_probability("p", p)
    if N < 0:
        raise ParameterDomainError("N", N, "a non-negative count")
    if K < 0:
        return LogReal.zero()
    if K >= N:
        return LogReal.one()
    if p == 0.0:
        return LogReal.one()
    if p == 1.0:
        return LogReal.zero()

    j = np.arange(N + 1, dtype=float)
    log_terms = log_binom(N, j) + j * math.log(p) + (N - j) * math.log1p(-p)

    if K < N * p:
        return log_sum(log_terms[: K + 1])
    upper = log_sum(log_terms[K + 1:]).log_magnitude
    if upper >= 0.0:
        return LogReal.zero()
    return LogReal.from_log(math.log1p(-math.exp(upper)))


def chernoff_tail_bound(n: int, p: float, t: float) -> LogReal:
    """Chernoff bound exp(-n D(p+t || p)) on Pr[Bin(n, p) >= (p+t) n]."""
    p = _check_probability("p", p)
    if not (-1e-15 <= t <= 1.0 - p + 1e-15):
        raise ParameterDomainError("t", t, f"t in [0, {1.0 - p}]")
    threshold = min(1.0, max(p, p + t))
    divergence = rel_entropy(threshold, p)
    if math.isinf(divergence):
        return LogReal.zero()
    return LogReal.from_log(-n * divergence)


def reg_beta_tail_exact(eta: float, k: int, n: int) -> LogReal:
    """1 - I_eta(k, n) computed as the binomial CDF F(k-1, n+k-1, eta)."""
    eta = _check_probability("eta", eta)
    if k < 1 or n < 1:
        raise ParameterDomainError("k, n", (k, n), "both >= 1")
    return binom_tail_exact(k - 1, n + k - 1, eta)


def reg_beta_tail_bound(eta: float, k: int, n: int) -> LogReal:
    """Chernoff upper bound exp(-(n+k-1) D((k-1)/(n+k-1) || eta)) on 1 - I_eta(k, n).

    Valid once eta >= (k-1)/(n+k-1), which puts the binomial threshold above
    its mean.
    """
    eta = _check_probability("eta", eta)
    if k < 1 or n < 1:
        raise ParameterDomainError("k, n", (k, n), "both >= 1")
    trials = n + k - 1
    x = (k - 1) / trials
    if eta < x - 1e-15:
        raise PreconditionError(
            "reg_beta_tail_bound",
            "eta >= (k-1)/(n+k-1)",
            {"eta": eta, "k": k, "n": n, "threshold": x},
        )
    divergence = rel_entropy(x, eta) if eta > x else 0.0
    if math.isinf(divergence):
        return LogReal.zero()
    return LogReal.from_log(-trials * divergence)


@dataclass(frozen=True)
class Chi2TailBounds:
    """Laurent-Massart deviations for a chi-square variable with ``dof`` degrees."""

    dof: float
    x: float
    upper_deviation: float
    lower_deviation: float
    upper_probability: LogReal
    lower_probability: LogReal

    @property
    def upper_threshold(self) -> float:
        return self.dof + self.upper_deviation

    @property
    def lower_threshold(self) -> float:
        return self.dof - self.lower_deviation


def chi2_tail_bounds(D: float, x: float) -> Chi2TailBounds:
    """Pr[U - D >= 2 sqrt(Dx) + 2x] <= e^-x and Pr[D - U >= 2 sqrt(Dx)] <= e^-x."""
    if D < 1:
        raise ParameterDomainError("D", D, "at least 1 degree of freedom")
    if x < 0 or math.isnan(x):
        raise ParameterDomainError("x", x, "non-negative")
    root = 2.0 * math.sqrt(D * x)
    bound = LogReal.from_log(-x)
    return Chi2TailBounds(
        dof=float(D),
        x=float(x),
        upper_deviation=root + 2.0 * x,
        lower_deviation=root,
        upper_probability=bound,
        lower_probability=bound,
    )


def chi2_tail_exact(D: float, threshold: float, upper: bool = True) -> LogReal:
    """Exact chi-square tail Pr[U >= threshold] (or Pr[U <= threshold])."""
    if D <= 0:
        raise ParameterDomainError("D", D, "positive degrees of freedom")
    if upper:
        return LogReal.from_log(float(stats.chi2.logsf(threshold, D)))
    return LogReal.from_log(float(stats.chi2.logcdf(threshold, D)))


def incomplete_gamma_Q(s: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(s, x)."""
    if not s > 0:
        raise ParameterDomainError("s", s, "positive")
    if not x >= 0:
        raise ParameterDomainError("x", x, "non-negative")
    return float(special.gammaincc(s, x))
