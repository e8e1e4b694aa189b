"""
SU(2,2) generalized coherent states |Lambda, n>.

The state attached to a 2x2 contraction Lambda is

    |Lambda, n> = det(1 - Lambda Lambda^+)^(n/2) exp(sum_ij lambda_ij Z_ij) |0>

with Z11 = sum a^+ b^+, Z12 = sum a^+ a'^+, Z21 = sum b^+ b'^+ and
Z22 = sum a'^+ b'^+. This module holds the parameters, overlaps, the invariant
measure restricted to D_eta = {Lambda : Lambda Lambda^+ <= eta}, samplers for
that measure and the photon-number block weights.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import integrate, special, stats

from ..enhancements.logging import get_logger
from .basis import BasisSet, MonomialIndex
from .exceptions import ParameterDomainError, PreconditionError
from .mathkit import LogReal, log_binom, log_sum, rel_entropy
from .montecarlo import haar_unitary

logger = get_logger(__name__)

REGION_TOLERANCE = 1e-12
WEIGHTINGS = ("flat", "vacuum")


@dataclass(frozen=True, eq=False)
class LambdaMatrix:
    """A 2x2 complex matrix with spectral norm below one."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise ParameterDomainError("Lambda", matrix.shape, "a 2x2 matrix")
        if not np.all(np.isfinite(matrix)):
            raise ParameterDomainError("Lambda", matrix.tolist(), "finite entries")
        norm = float(np.linalg.norm(matrix, 2))
        if norm >= 1.0:
            raise ParameterDomainError("Lambda", norm, "spectral norm < 1")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_entries(cls, l11: complex, l12: complex, l21: complex, l22: complex) -> "LambdaMatrix":
        return cls(np.array([[l11, l12], [l21, l22]], dtype=complex))

    @classmethod
    def diag(cls, first: complex, second: complex) -> "LambdaMatrix":
        return cls.from_entries(first, 0, 0, second)

    @classmethod
    def zero(cls) -> "LambdaMatrix":
        return cls(np.zeros((2, 2), dtype=complex))

    @property
    def entries(self) -> np.ndarray:
        """(lambda11, lambda12, lambda21, lambda22)."""
        return self.matrix.reshape(4)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def __repr__(self) -> str:
        return f"LambdaMatrix({self.matrix.tolist()})"


@dataclass(frozen=True)
class SingularPair:
    """Squared singular values (x, y) of a contraction, stored with x >= y."""

    x: float
    y: float

    def __post_init__(self) -> None:
        for name in ("x", "y"):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0):
                raise ParameterDomainError(name, value, "a value in [0, 1)")


def in_region(L: LambdaMatrix, eta: float) -> bool:
    """True iff eta 1 - Lambda Lambda^+ is positive semidefinite (inclusive boundary)."""
    if not (0.0 <= eta <= 1.0):
        raise ParameterDomainError("eta", eta, "a value in [0, 1]")
    return singular_squares(L).x <= eta + REGION_TOLERANCE


def svd_factors(L: LambdaMatrix) -> Tuple[np.ndarray, SingularPair, np.ndarray]:
    """(u, singular squares, v) with Lambda = u diag(sqrt x, sqrt y) v^+."""
    u, s, vh = np.linalg.svd(L.matrix)
    pair = SingularPair(*(min(float(v) ** 2, np.nextafter(1.0, 0.0)) for v in s))
    return u, pair, vh.conj().T


def singular_squares(L: LambdaMatrix) -> SingularPair:
    s = np.linalg.svd(L.matrix, compute_uv=False)
    return SingularPair(float(s[0]) ** 2, float(s[1]) ** 2)


def log_det_defect(L: LambdaMatrix) -> float:
    """ln det(1 - Lambda Lambda^+) = ln(1-x) + ln(1-y)."""
    pair = singular_squares(L)
    return math.log1p(-pair.x) + math.log1p(-pair.y)


def vacuum_overlap(L: LambdaMatrix, n: int) -> float:
    """<0|Lambda, n> = det(1 - Lambda Lambda^+)^(n/2)."""
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    return math.exp(0.5 * n * log_det_defect(L))


def monomial_values(lams: np.ndarray, basis: BasisSet) -> np.ndarray:
    """lambda^a / a! for every sample row of ``lams`` (shape (S, 4)) and basis monomial."""
    exponents = basis.exponents
    values = np.ones((lams.shape[0], exponents.shape[0]), dtype=complex)
    for p in range(4):
        values *= lams[:, p:p + 1] ** exponents[None, :, p]
    factorials = np.array([index.factorial() for index in basis], dtype=float)
    return values / factorials


def coherent_coeffs(L: LambdaMatrix, n: int, K: int) -> Dict[MonomialIndex, complex]:
    """Coefficients of |Lambda, n> on the monomials Z^a|0> with |a| <= K."""
    basis = BasisSet.build(K)
    values = monomial_values(L.entries[None, :], basis)[0] * vacuum_overlap(L, n)
    return {index: complex(value) for index, value in zip(basis, values)}


def overlap(L1: LambdaMatrix, L2: LambdaMatrix, n: int) -> complex:
    """<Lambda1, n|Lambda2, n> = det(1-L1L1^+)^(n/2) det(1-L2L2^+)^(n/2) det(1-L1^+L2)^(-n)."""
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    cross = np.linalg.det(np.eye(2) - L1.matrix.conj().T @ L2.matrix)
    log_value = 0.5 * n * (log_det_defect(L1) + log_det_defect(L2)) - n * np.log(cross)
    return complex(np.exp(log_value))


def _q_constant(n: int) -> float:
    return float((n - 1) * (n - 2) ** 2 * (n - 3))


def q_density(x, y, n: int):
    """q(x, y) = (n-1)(n-2)^2(n-3)(x-y)^2 / (2 (1-x)^4 (1-y)^4)."""
    if n < 4:
        raise ParameterDomainError("n", n, ">= 4")
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if np.any((x_arr < 0) | (x_arr >= 1) | (y_arr < 0) | (y_arr >= 1)):
        raise ParameterDomainError("x, y", (x, y), "values in [0, 1)")
    value = _q_constant(n) * (x_arr - y_arr) ** 2 / (2.0 * (1.0 - x_arr) ** 4 * (1.0 - y_arr) ** 4)
    return float(value) if value.ndim == 0 else value


def _proposal_power(n: int, weighting: str) -> int:
    if weighting == "flat":
        return -4
    if weighting == "vacuum":
        return n - 4
    raise ParameterDomainError("weighting", weighting, f"one of {WEIGHTINGS}")


def _proposal_inverse_cdf(u: np.ndarray, eta: float, power: int) -> np.ndarray:
    # density proportional to (1-t)^power on [0, eta]
    exponent = power + 1
    span = -math.expm1(exponent * math.log1p(-eta))
    return -np.expm1(np.log1p(-u * span) / exponent)


def expected_acceptance(eta: float, n: int, weighting: str = "flat") -> float:
    """Acceptance probability of the radial rejection sampler.

    The proposal draws x and y independently from (1-t)^p on [0, eta] and
    accepts with probability (x-y)^2/eta^2, so the rate is
    2 (m2 m0 - m1^2) / (m0^2 eta^2) with m_j the proposal moments.
    """
    power = _proposal_power(n, weighting)
    moments = [
        integrate.quad(lambda t, j=j: t ** j * (1.0 - t) ** power, 0.0, eta)[0] for j in range(3)
    ]
    m0, m1, m2 = moments
    return 2.0 * (m2 * m0 - m1 ** 2) / (m0 ** 2 * eta ** 2)


def sample_radial_batch(eta: float, n: int, rng: np.random.Generator, size: int,
                        weighting: str = "flat") -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` pairs (x, y), x >= y, from q on [0, eta]^2.

    With ``weighting="vacuum"`` the target density is q(x,y)(1-x)^n(1-y)^n
    instead; its total mass on [0, eta]^2 is :func:`vacuum_mass`.
    """
    if not (0.0 < eta < 1.0):
        raise ParameterDomainError("eta", eta, "a value in (0, 1)")
    if n < 4:
        raise ParameterDomainError("n", n, ">= 4")
    power = _proposal_power(n, weighting)
    xs, ys = [], []
    remaining = size
    rate = 0.1
    while remaining > 0:
        chunk = max(64, int(1.5 * remaining / rate))
        x = _proposal_inverse_cdf(rng.random(chunk), eta, power)
        y = _proposal_inverse_cdf(rng.random(chunk), eta, power)
        keep = rng.random(chunk) * eta ** 2 < (x - y) ** 2
        accepted = int(keep.sum())
        rate = max(accepted / chunk, 1e-4)
        xs.append(x[keep][:remaining])
        ys.append(y[keep][:remaining])
        remaining -= min(accepted, remaining)
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    return np.maximum(x, y), np.minimum(x, y)


def sample_radial(eta: float, n: int, rng: np.random.Generator, weighting: str = "flat") -> SingularPair:
    """One pair (x, y) distributed proportionally to q on [0, eta]^2."""
    x, y = sample_radial_batch(eta, n, rng, 1, weighting)
    return SingularPair(float(x[0]), float(y[0]))


def sample_lambda_batch(eta: float, n: int, rng: np.random.Generator, size: int,
                        weighting: str = "flat") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrices u diag(sqrt x, sqrt y) v^+ with Haar u, v; returns (Lambdas, x, y)."""
    x, y = sample_radial_batch(eta, n, rng, size, weighting)
    u = haar_unitary(2, rng, size)
    v = haar_unitary(2, rng, size)
    sigma = np.zeros((size, 2, 2))
    sigma[:, 0, 0] = np.sqrt(x)
    sigma[:, 1, 1] = np.sqrt(y)
    lams = u @ sigma @ np.conj(np.swapaxes(v, 1, 2))
    return lams, x, y


def sample_lambda(eta: float, n: int, rng: np.random.Generator, weighting: str = "flat") -> LambdaMatrix:
    lams, _, _ = sample_lambda_batch(eta, n, rng, 1, weighting)
    return LambdaMatrix(lams[0])


def photon_block_weight(K: int, n: int, s: SingularPair) -> float:
    """tr[Pi_{=K} P_{x,y}] = sum_{k1+k2=K} a_k1 a_k2 (1-x)^n (1-y)^n x^k1 y^k2, a_k = C(n+k-1, k)."""
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    k1 = np.arange(K + 1, dtype=float)
    k2 = K - k1
    log_terms = (
        log_binom(n + k1 - 1, k1)
        + log_binom(n + k2 - 1, k2)
        + special.xlogy(k1, s.x)
        + special.xlogy(k2, s.y)
        + n * (math.log1p(-s.x) + math.log1p(-s.y))
    )
    return float(log_sum(log_terms))


def vacuum_mass(n: int, eta: float) -> float:
    """Mass of q(x,y)(1-x)^n(1-y)^n on [0, eta]^2; equals 1 at eta = 1."""
    return float(block_mass_inside(n, 0, eta))


def _log_moments(n: int, top: int, eta: float, region: str) -> np.ndarray:
    # ln of int_R t^j (1-t)^(n-4) dt for j = 0..top
    j = np.arange(top + 1, dtype=float)
    base = special.betaln(j + 1, n - 3)
    if region == "full":
        return base
    if region == "inside":
        return base + stats.beta.logcdf(eta, j + 1, n - 3)
    return base + stats.beta.logsf(eta, j + 1, n - 3)


def _block_pair_terms(n: int, K: int, first: np.ndarray, second: np.ndarray):
    """Log terms and signs of sum a_k1 a_k2 int int (x-y)^2 x^k1 y^k2 w(x) w(y) over R1 x R2."""
    k1 = np.arange(K + 1)
    k2 = K - k1
    log_a = log_binom(n + k1 - 1, k1) + log_binom(n + k2 - 1, k2)
    logs = [
        log_a + first[k1 + 2] + second[k2],
        log_a + first[k1 + 1] + second[k2 + 1] + math.log(2.0),
        log_a + first[k1] + second[k2 + 2],
    ]
    signs = [np.ones(K + 1), -np.ones(K + 1), np.ones(K + 1)]
    return np.concatenate(logs), np.concatenate(signs)


def _check_block_args(n: int, K: int, eta: float) -> None:
    if n < 4:
        raise ParameterDomainError("n", n, ">= 4")
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    if not (0.0 <= eta <= 1.0):
        raise ParameterDomainError("eta", eta, "a value in [0, 1]")


def _clamped(value: LogReal) -> LogReal:
    # rounding in the (x-y)^2 expansion can leave a tiny negative residue
    return value if value.sign >= 0 else LogReal.zero()


def block_mass_inside(n: int, K: int, eta: float) -> LogReal:
    """tr(Pi_{=K} P_eta): the q-weighted block weight integrated over [0, eta]^2."""
    _check_block_args(n, K, eta)
    inside = _log_moments(n, K + 2, eta, "inside")
    logs, signs = _block_pair_terms(n, K, inside, inside)
    return _clamped(log_sum(logs + math.log(_q_constant(n) / 2.0), signs))


def block_mass_outside(n: int, K: int, eta: float) -> LogReal:
    """tr(Pi_{=K} (1 - P_eta)): the same integral over the complement of [0, eta]^2."""
    _check_block_args(n, K, eta)
    inside = _log_moments(n, K + 2, eta, "inside")
    outside = _log_moments(n, K + 2, eta, "outside")
    full = _log_moments(n, K + 2, eta, "full")
    logs_a, signs_a = _block_pair_terms(n, K, outside, full)
    logs_b, signs_b = _block_pair_terms(n, K, inside, outside)
    logs = np.concatenate([logs_a, logs_b]) + math.log(_q_constant(n) / 2.0)
    return _clamped(log_sum(logs, np.concatenate([signs_a, signs_b])))


def excluded_block_bound(n: int, K: int, eta: float, form: str = "general") -> LogReal:
    """Chernoff-type upper bounds on :func:`block_mass_outside`.

    Forms: ``"general"`` (K+1)(N+K+4)^6/(N+1)^3, ``"n9"`` 64(N+K)^7/N^3 for
    n >= 9 and ``"n38"`` 2(N+K)^7/N^3 for n >= 38, each times
    exp(-N D(N/(N+K) || 1-eta)).

    Raises:
        PreconditionError: if eta < K/(N+K) or n is below the form's threshold
    """
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6")
    N = n - 5
    if eta < K / (N + K) - 1e-15:
        raise PreconditionError("excluded_block_bound", "eta >= K/(N+K)", {"n": n, "K": K, "eta": eta})
    exponent = -N * rel_entropy(N / (N + K), 1.0 - eta)
    if form == "general":
        log_prefactor = math.log(K + 1) + 6 * math.log(N + K + 4) - 3 * math.log(N + 1)
    elif form == "n9":
        if n < 9:
            raise PreconditionError("excluded_block_bound", "n >= 9", {"n": n})
        log_prefactor = math.log(64.0) + 7 * math.log(N + K) - 3 * math.log(N)
    elif form == "n38":
        if n < 38:
            raise PreconditionError("excluded_block_bound", "n >= 38", {"n": n})
        log_prefactor = math.log(2.0) + 7 * math.log(N + K) - 3 * math.log(N)
    else:
        raise ParameterDomainError("form", form, "'general', 'n9' or 'n38'")
    return LogReal.from_log(log_prefactor + exponent)


__all__ = [
    "LambdaMatrix",
    "SingularPair",
    "in_region",
    "svd_factors",
    "singular_squares",
    "log_det_defect",
    "vacuum_overlap",
    "coherent_coeffs",
    "overlap",
    "q_density",
    "sample_radial",
    "sample_radial_batch",
    "sample_lambda",
    "sample_lambda_batch",
    "photon_block_weight",
    "vacuum_mass",
    "block_mass_inside",
    "block_mass_outside",
    "excluded_block_bound",
    "expected_acceptance",
    "monomial_values",
]
