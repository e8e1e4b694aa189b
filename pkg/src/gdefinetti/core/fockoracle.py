"""
Brute-force truncated multimode Fock space.

The oracle enumerates every occupation pattern of ``mode_count`` bosonic modes
with at most ``cutoff`` photons in total and represents creation operators as
scipy.sparse matrices on that basis. Copy i of the n-fold system owns modes
4i + 0 (a), 4i + 1 (b), 4i + 2 (a') and 4i + 3 (b'). Every closed form of the
coherent and subspace modules is checked against it on small instances.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, sparse
from scipy.special import gammaincc

from ..enhancements.logging import PerformanceLogger, get_logger
from .basis import PAIR_LABELS, BasisSet, MonomialIndex
from .coherent import LambdaMatrix, log_det_defect, photon_block_weight, singular_squares
from .config import config
from .exceptions import (
    CutoffViolationError,
    DimensionMismatchError,
    ParameterDomainError,
    ResourceLimitError,
    TailTooLargeError,
)
from .mathkit import incomplete_gamma_Q
from .montecarlo import SeedLike, as_generator, haar_unitary

logger = get_logger(__name__)

MODE_OFFSETS = {"a": 0, "b": 1, "a'": 2, "b'": 3}
# (first, second) mode offsets created by each pair operator
PAIR_MODES = {"11": (0, 1), "12": (0, 2), "21": (1, 3), "22": (2, 3)}
DEFAULT_OVERLAP_CUTOFF = 60


def fock_dimension(mode_count: int, cutoff: int) -> int:
    """Number of occupation patterns with total photons <= cutoff."""
    return math.comb(mode_count + cutoff, cutoff)


def _enumerate_occupations(mode_count: int, cutoff: int) -> np.ndarray:
    if mode_count == 1:
        return np.arange(cutoff + 1, dtype=np.int64)[:, None]
    # stars and bars per total; combinations come out in lexicographic order
    blocks = []
    for total in range(cutoff + 1):
        slots = total + mode_count - 1
        bars = np.array(list(itertools.combinations(range(slots), mode_count - 1)), dtype=np.int64)
        bars = bars.reshape(-1, mode_count - 1)
        rows = bars.shape[0]
        edges = np.hstack([np.full((rows, 1), -1), bars, np.full((rows, 1), slots)])
        blocks.append(np.diff(edges, axis=1) - 1)
    return np.vstack(blocks)


class FockSpace:
    """Occupation basis of ``mode_count`` modes truncated at ``cutoff`` total photons.

    States are ordered by total photon number, then lexicographically on the
    occupation tuple. The vacuum is always index 0.
    """

    def __init__(self, mode_count: int, cutoff: int, max_dimension: Optional[int] = None):
        if mode_count < 1:
            raise ParameterDomainError("mode_count", mode_count, ">= 1")
        if cutoff < 0:
            raise ParameterDomainError("cutoff", cutoff, ">= 0")
        limit = max_dimension if max_dimension is not None else config.get("max_fock_dimension")
        dimension = fock_dimension(mode_count, cutoff)
        if dimension > limit:
            raise ResourceLimitError(f"Fock space ({mode_count} modes, cutoff {cutoff})", dimension, limit)
        if (cutoff + 1) ** mode_count >= 2 ** 63:
            raise ResourceLimitError("occupation key range", (cutoff + 1) ** mode_count, 2 ** 63 - 1)

        self.mode_count = mode_count
        self.cutoff = cutoff
        with PerformanceLogger("fock_space", logger, level=logging.DEBUG):
            self.occupations = _enumerate_occupations(mode_count, cutoff)
            self._radix = (cutoff + 1) ** np.arange(mode_count, dtype=np.int64)
            keys = self.occupations @ self._radix
            self._order = np.argsort(keys)
            self._sorted_keys = keys[self._order]
        self.totals = self.occupations.sum(axis=1)
        logger.debug("Built Fock space", extra={"modes": mode_count, "cutoff": cutoff, "dimension": dimension})

    @property
    def dimension(self) -> int:
        return int(self.occupations.shape[0])

    def __len__(self) -> int:
        return self.dimension

    def index(self, occupations: np.ndarray) -> np.ndarray:
        """Basis positions of occupation rows; -1 for patterns outside the space."""
        occupations = np.atleast_2d(np.asarray(occupations, dtype=np.int64))
        if occupations.shape[1] != self.mode_count:
            raise DimensionMismatchError(self.mode_count, occupations.shape[1], "occupation length")
        inside = (occupations.sum(axis=1) <= self.cutoff) & np.all(occupations >= 0, axis=1)
        keys = np.where(inside, occupations @ self._radix, -1)
        slots = np.clip(np.searchsorted(self._sorted_keys, keys), 0, self.dimension - 1)
        found = inside & (self._sorted_keys[slots] == keys)
        return np.where(found, self._order[slots], -1)

    def vacuum(self) -> np.ndarray:
        state = np.zeros(self.dimension, dtype=complex)
        state[0] = 1.0
        return state

    def photon_numbers(self) -> np.ndarray:
        return self.totals

    def __repr__(self) -> str:
        return f"FockSpace(mode_count={self.mode_count}, cutoff={self.cutoff}, dimension={self.dimension})"


@lru_cache(maxsize=8)
def cached_space(mode_count: int, cutoff: int) -> FockSpace:
    """Shared read-only FockSpace for repeated oracle calls."""
    return FockSpace(mode_count, cutoff)


@dataclass(frozen=True)
class SparseOperator:
    """A truncated operator stored as a CSR matrix over a FockSpace basis."""

    space: FockSpace
    matrix: sparse.csr_matrix

    def __post_init__(self) -> None:
        expected = (self.space.dimension, self.space.dimension)
        if self.matrix.shape != expected:
            raise DimensionMismatchError(expected, self.matrix.shape, "SparseOperator")

    def apply(self, state: np.ndarray) -> np.ndarray:
        if state.shape != (self.space.dimension,):
            raise DimensionMismatchError(self.space.dimension, state.shape, "state vector")
        return self.matrix @ state

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.space, (self.matrix @ other.matrix).tocsr())
        return self.apply(np.asarray(other))

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.space, (self.matrix + other.matrix).tocsr())

    def scaled(self, factor: complex) -> "SparseOperator":
        return SparseOperator(self.space, (self.matrix * factor).tocsr())

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.space, self.matrix.conj().T.tocsr())

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)


def _raising_operator(space: FockSpace, modes: Sequence[int]) -> SparseOperator:
    """Product of creation operators on ``modes`` (distinct), truncated at the cutoff."""
    source = np.flatnonzero(space.totals <= space.cutoff - len(modes))
    target_occ = space.occupations[source].copy()
    amplitude = np.ones(source.size)
    for mode in modes:
        amplitude *= np.sqrt(target_occ[:, mode] + 1.0)
        target_occ[:, mode] += 1
    target = space.index(target_occ)
    matrix = sparse.coo_matrix(
        (amplitude.astype(complex), (target, source)), shape=(space.dimension, space.dimension)
    )
    return SparseOperator(space, matrix.tocsr())


def build_creation(space: FockSpace, mode: int) -> SparseOperator:
    """Creation operator c_mode^+ (states at the cutoff are mapped to zero)."""
    if not 0 <= mode < space.mode_count:
        raise ParameterDomainError("mode", mode, f"an index in [0, {space.mode_count})")
    return _raising_operator(space, [mode])


def _check_pair_space(space: FockSpace, n: int) -> None:
    if space.mode_count != 4 * n:
        raise DimensionMismatchError(4 * n, space.mode_count, "mode count of a 4n-mode space")


def build_Z(space: FockSpace, which: str, n: int) -> SparseOperator:
    """Pair-creation operator Z_which = sum_i c_p,i^+ c_q,i^+ over the n copies."""
    if which not in PAIR_MODES:
        raise ParameterDomainError("which", which, f"one of {PAIR_LABELS}")
    _check_pair_space(space, n)
    if space.cutoff < 2:
        raise ParameterDomainError("cutoff", space.cutoff, ">= 2")
    first, second = PAIR_MODES[which]
    total = None
    for copy in range(n):
        term = _raising_operator(space, [4 * copy + first, 4 * copy + second])
        total = term if total is None else total + term
    return total


def _pair_operators(space: FockSpace, n: int) -> Dict[str, SparseOperator]:
    return {label: build_Z(space, label, n) for label in PAIR_LABELS}


def monomial_vector(space: FockSpace, idx: MonomialIndex, n: int,
                    operators: Optional[Dict[str, SparseOperator]] = None) -> np.ndarray:
    """Z11^i Z12^j Z21^k Z22^l |0> in the truncated space."""
    idx = MonomialIndex(*idx)
    if 2 * idx.degree > space.cutoff:
        raise CutoffViolationError(2 * idx.degree, space.cutoff)
    state = space.vacuum()
    if idx.degree == 0:
        return state
    if operators is None:
        operators = _pair_operators(space, n)
    for label, power in zip(PAIR_LABELS, idx):
        for _ in range(power):
            state = operators[label].apply(state)
    return state


def gram_oracle(n: int, K: int) -> np.ndarray:
    """Inner products of all monomial vectors of degree <= K, by explicit Fock vectors."""
    if n < 1 or K < 0:
        raise ParameterDomainError("(n, K)", (n, K), "n >= 1 and K >= 0")
    space = FockSpace(4 * n, 2 * K)
    operators = _pair_operators(space, n) if space.cutoff >= 2 else None
    basis = BasisSet.build(K)
    with PerformanceLogger("gram_oracle", logger):
        vectors = np.column_stack([monomial_vector(space, idx, n, operators) for idx in basis])
        gram = vectors.conj().T @ vectors
    return np.real(gram)


def predicted_tail(L: LambdaMatrix, n: int, degree_cutoff: int) -> float:
    """Norm^2 of |Lambda, n> carried by pair degrees above ``degree_cutoff``."""
    pair = singular_squares(L)
    kept = math.fsum(photon_block_weight(d, n, pair) for d in range(degree_cutoff + 1))
    return max(0.0, 1.0 - kept)


def _pair_generator(space: FockSpace, L: LambdaMatrix, n: int) -> SparseOperator:
    operators = _pair_operators(space, n)
    total = None
    for label, value in zip(PAIR_LABELS, L.entries):
        term = operators[label].scaled(complex(value))
        total = term if total is None else total + term
    return total


def _series_terms(space: FockSpace, L: LambdaMatrix, n: int) -> List[np.ndarray]:
    # (sum lambda_ij Z_ij)^d |0> / d! for d = 0 .. cutoff // 2
    generator = _pair_generator(space, L, n)
    term = space.vacuum()
    terms = [term]
    for d in range(1, space.cutoff // 2 + 1):
        term = generator.apply(term) / d
        terms.append(term)
    return terms


@dataclass
class TruncatedState:
    """Globally truncated |Lambda, n> together with its predicted missing norm."""

    vector: np.ndarray
    tail: float
    space: FockSpace

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)


def coherent_truncated(L: LambdaMatrix, n: int, space: FockSpace,
                       tolerance: Optional[float] = None) -> TruncatedState:
    """det(1-Lambda Lambda^+)^(n/2) exp(sum lambda_ij Z_ij)|0> truncated at the space cutoff.

    Raises:
        TailTooLargeError: if the predicted tail exceeds ``tolerance``
            (defaults to the ``tail_tolerance`` setting; pass ``math.inf``
            to skip the check)
    """
    _check_pair_space(space, n)
    tolerance = config.get("tail_tolerance") if tolerance is None else tolerance
    tail = predicted_tail(L, n, space.cutoff // 2)
    if tail > tolerance:
        raise TailTooLargeError(tail, tolerance, space.cutoff)
    vector = math.exp(0.5 * n * log_det_defect(L)) * np.sum(_series_terms(space, L, n), axis=0)
    return TruncatedState(vector=vector, tail=tail, space=space)


def photon_marginal(L: LambdaMatrix, n: int, K_max: int) -> np.ndarray:
    """Norm^2 of |Lambda, n> in each pair degree 0..K_max, read off the Fock vector."""
    space = FockSpace(4 * n, 2 * K_max)
    state = coherent_truncated(L, n, space, tolerance=math.inf)
    weights = np.abs(state.vector) ** 2
    return np.array([weights[space.totals == 2 * d].sum() for d in range(K_max + 1)])


def overlap_oracle(L1: LambdaMatrix, L2: LambdaMatrix, n: int,
                   cutoff: int = DEFAULT_OVERLAP_CUTOFF, tolerance: Optional[float] = None) -> complex:
    """<Lambda1, n|Lambda2, n> between states truncated at ``cutoff`` total photons.

    One copy is simulated explicitly in a 4-mode space; the n-copy overlap
    restricted to total degree <= cutoff/2 is the truncated n-th power of the
    per-degree single-copy overlaps.
    """
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    tolerance = config.get("tail_tolerance") if tolerance is None else tolerance
    degrees = cutoff // 2
    for L in (L1, L2):
        tail = predicted_tail(L, n, degrees)
        if tail > tolerance:
            raise TailTooLargeError(tail, tolerance, cutoff)
    space = cached_space(4, cutoff)
    first = _series_terms(space, L1, 1)
    second = _series_terms(space, L2, 1)
    per_degree = np.array([np.vdot(u, v) for u, v in zip(first, second)])
    product = np.zeros(degrees + 1, dtype=complex)
    product[0] = 1.0
    for _ in range(n):
        product = np.convolve(product, per_degree)[: degrees + 1]
    prefactor = math.exp(0.5 * n * (log_det_defect(L1) + log_det_defect(L2)))
    return complex(prefactor * product.sum())


def lifted_mode_matrix(u: np.ndarray) -> np.ndarray:
    """Single-particle matrix of W_u on 4n modes: conj(u) on a, u on b, u on a', conj(u) on b'.

    Entry [q, p] is the coefficient of c_q^+ in the image of c_p^+.
    """
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    full = np.zeros((4 * n, 4 * n), dtype=complex)
    for offset, block in ((0, u.conj()), (1, u), (2, u), (3, u.conj())):
        # c_{p,i}^+ -> sum_j block[i, j] c_{p,j}^+
        full[offset::4, offset::4] = block.T
    return full


def apply_passive_unitary(space: FockSpace, state: np.ndarray, mode_matrix: np.ndarray) -> np.ndarray:
    """Apply the passive transformation c_p^+ -> sum_q mode_matrix[q, p] c_q^+ to a state."""
    if mode_matrix.shape != (space.mode_count, space.mode_count):
        raise DimensionMismatchError((space.mode_count,) * 2, mode_matrix.shape, "mode matrix")
    creations = [build_creation(space, q) for q in range(space.mode_count)]
    transformed = []
    for p in range(space.mode_count):
        column = sparse.csr_matrix((space.dimension, space.dimension), dtype=complex)
        for q in np.flatnonzero(mode_matrix[:, p]):
            column = column + mode_matrix[q, p] * creations[q].matrix
        transformed.append(SparseOperator(space, column.tocsr()))
    result = np.zeros(space.dimension, dtype=complex)
    for position in np.flatnonzero(np.abs(state) > 0):
        occupation = space.occupations[position]
        image = space.vacuum()
        for mode, count in enumerate(occupation):
            for _ in range(count):
                image = transformed[mode].apply(image)
        norm = math.sqrt(math.prod(math.factorial(int(c)) for c in occupation))
        result += state[position] * image / norm
    return result


def max_invariance_deviation(space: FockSpace, state: np.ndarray, n: int,
                             unitaries: Iterable[np.ndarray]) -> float:
    """max over u of ||W_u v - v||."""
    _check_pair_space(space, n)
    worst = 0.0
    for u in unitaries:
        image = apply_passive_unitary(space, state, lifted_mode_matrix(u))
        worst = max(worst, float(np.linalg.norm(image - state)))
    return worst


def invariance_check(n: int, idx: MonomialIndex, trials: int, rng: SeedLike = None) -> float:
    """Largest ||W_u v - v|| of the monomial vector over ``trials`` Haar-random u in U(n)."""
    if trials < 1:
        raise ParameterDomainError("trials", trials, ">= 1")
    idx = MonomialIndex(*idx)
    space = FockSpace(4 * n, 2 * idx.degree)
    state = monomial_vector(space, idx, n)
    generator = as_generator(rng)
    unitaries = [haar_unitary(n, generator) for _ in range(trials)]
    deviation = max_invariance_deviation(space, state, n, unitaries)
    logger.info("Invariance check", extra={"n": n, "index": tuple(idx), "deviation": deviation})
    return deviation


def t_operator_eigenvalue(m_total: int, n: int, d: float) -> float:
    """Eigenvalue Q(M+n, nd) of the heterodyne energy operator T_n^d on M-photon states."""
    if m_total < 0:
        raise ParameterDomainError("m_total", m_total, ">= 0")
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    if d < 0:
        raise ParameterDomainError("d", d, ">= 0")
    return incomplete_gamma_Q(m_total + n, n * d)


def t_eigenvalue_quadrature(M: int, d: float) -> float:
    """Single-mode integral of e^-r r^M / M! over [d, inf)."""
    if M < 0 or d < 0:
        raise ParameterDomainError("(M, d)", (M, d), "M >= 0 and d >= 0")
    log_norm = math.lgamma(M + 1)

    def density(r: float) -> float:
        return math.exp(-r + (M * math.log(r) if r > 0 else (0.0 if M == 0 else -math.inf)) - log_norm)

    # mass sits within a few sqrt(M) of the mode r = M
    upper = max(d, M) + 60.0 * math.sqrt(M + 1.0) + 60.0
    value, _ = integrate.quad(density, d, upper, epsabs=1e-14, epsrel=1e-12, limit=200)
    return value


@dataclass
class LgrcReport:
    """Scalar check of U_n^d <= 2 T_n^d on the eigenvalues 2 Q(M+n, nd) - 1 for nd < M <= M_max."""

    n: int
    d: float
    M_max: int
    checked: int
    min_margin: Optional[float]
    worst_M: Optional[int]
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "d": self.d,
            "M_max": self.M_max,
            "checked": self.checked,
            "min_margin": self.min_margin,
            "worst_M": self.worst_M,
            "violations": self.violations,
            "passed": self.passed,
        }


def verify_U_le_2T(n: int, d: float, M_max: int) -> LgrcReport:
    """Check 2 Q(M+n, nd) >= 1 for every integer M with nd < M <= M_max."""
    if n < 1 or d < 0:
        raise ParameterDomainError("(n, d)", (n, d), "n >= 1 and d >= 0")
    start = math.floor(n * d) + 1
    M = np.arange(start, M_max + 1)
    if M.size == 0:
        return LgrcReport(n=n, d=d, M_max=M_max, checked=0, min_margin=None, worst_M=None, violations=0)
    margins = 2.0 * gammaincc(M + n, n * d) - 1.0
    worst = int(np.argmin(margins))
    return LgrcReport(
        n=n,
        d=d,
        M_max=M_max,
        checked=int(M.size),
        min_margin=float(margins[worst]),
        worst_M=int(M[worst]),
        violations=int(np.sum(margins < 0)),
    )


def lgrc_sweep(n_values: Iterable[int], d_values: Iterable[float], extra: int = 500) -> List[LgrcReport]:
    """verify_U_le_2T over a grid, with M_max = nd + extra."""
    d_values = list(d_values)
    reports = []
    with PerformanceLogger("lgrc_sweep", logger):
        for n in n_values:
            for d in d_values:
                reports.append(verify_U_le_2T(n, d, math.floor(n * d) + extra))
    return reports


__all__ = [
    "FockSpace",
    "SparseOperator",
    "cached_space",
    "TruncatedState",
    "LgrcReport",
    "fock_dimension",
    "build_creation",
    "build_Z",
    "monomial_vector",
    "gram_oracle",
    "coherent_truncated",
    "predicted_tail",
    "photon_marginal",
    "overlap_oracle",
    "lifted_mode_matrix",
    "apply_passive_unitary",
    "max_invariance_deviation",
    "invariance_check",
    "t_operator_eigenvalue",
    "t_eigenvalue_quadrature",
    "verify_U_le_2T",
    "lgrc_sweep",
]
