"""
The truncated symmetric subspace V<=K.

Gram matrices of the monomial vectors Z^a|0>, Monte-Carlo integration of the
restricted resolution of identity P_eta in that basis, and the generalized
eigenvalue certificate for (1 - eps) Pi<=K <= Pi<=K P_eta Pi<=K.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from ..enhancements.logging import PerformanceLogger, get_logger
from .basis import BasisSet, MonomialIndex, dim_V_eq, dim_V_leq
from .coherent import (
    LambdaMatrix,
    WEIGHTINGS,
    log_det_defect,
    monomial_values,
    sample_lambda_batch,
    vacuum_mass,
)
from .config import config
from .exceptions import (
    DimensionMismatchError,
    IllConditionedGramError,
    ParameterDomainError,
    PreconditionError,
    ResourceLimitError,
)
from .mathkit import LogReal
from .montecarlo import SeedLike, batch_mean_and_stderr, run_batches, spawn_generators, split_counts
from .params import definetti_epsilon, definetti_epsilon_exact, is_vacuous, volume_T

logger = get_logger(__name__)

SIGMA_MARGIN = 3.0
# cap on batches x dim^2 stored for the per-batch eigenvalue spread
MAX_BATCH_ENTRIES = 50_000_000


def _pair_exponents(s: int, t: int) -> Tuple[int, int, int, int]:
    # monomial (lambda11 lambda22)^(s-t) (lambda12 lambda21)^t
    return (s - t, t, t, s - t)


def _compositions(total: int) -> Tuple[MonomialIndex, ...]:
    basis = BasisSet.build(total)
    return basis.indices[basis.block_slice(total)]


@lru_cache(maxsize=64)
def _gram_block_exact(n: int, d: int) -> Tuple[Tuple[int, ...], ...]:
    """Degree-d block of the Gram matrix as exact integers.

    The generating function is det(1 - M^+ Lambda)^(-n) with
    det(1 - X) = 1 - tr X + det X, so every entry is a finite sum of
    products of binomials and multinomials.
    """
    basis = BasisSet.build(d)
    block = basis.block_slice(d)
    offset = block.start
    size = block.stop - block.start
    entries = [[0] * size for _ in range(size)]
    position = basis.position
    for s in range(d // 2 + 1):
        r = d - 2 * s
        m = r + s
        outer = math.comb(n + m - 1, m) * math.comb(m, s) * (-1) ** s
        for c in _compositions(r):
            multinomial = math.factorial(r) // math.prod(math.factorial(e) for e in c)
            for t in range(s + 1):
                b = MonomialIndex(*(ci + ei for ci, ei in zip(c, _pair_exponents(s, t))))
                col = position(b) - offset
                for t_prime in range(s + 1):
                    a = MonomialIndex(*(ci + ei for ci, ei in zip(c, _pair_exponents(s, t_prime))))
                    row = position(a) - offset
                    sign = (-1) ** (t + t_prime)
                    entries[row][col] += (
                        outer * sign * math.comb(s, t) * math.comb(s, t_prime) * multinomial
                    )
    indices = basis.indices[offset:offset + size]
    factorials = [index.factorial() for index in indices]
    return tuple(
        tuple(factorials[row] * factorials[col] * entries[row][col] for col in range(size))
        for row in range(size)
    )


def gram_block_exact(n: int, d: int) -> List[List[int]]:
    """Integer Gram block <Z^a 0|Z^b 0> for |a| = |b| = d."""
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    if d < 0:
        raise ParameterDomainError("d", d, ">= 0")
    return [list(row) for row in _gram_block_exact(n, d)]


def gram_matrix(n: int, K: int) -> np.ndarray:
    """Gram matrix G_ab = <Z^a 0|Z^b 0> over BasisSet.build(K).

    Blocks of different total degree are exactly zero. Entries are computed
    as exact integers and rounded once to float64.
    """
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    basis = BasisSet.build(K)
    G = np.zeros((len(basis), len(basis)))
    for d in range(K + 1):
        block = basis.block_slice(d)
        G[block, block] = np.array([[float(v) for v in row] for row in _gram_block_exact(n, d)])
    return G


@dataclass
class GramOperatorPair:
    """Gram matrix G and the Monte-Carlo estimate M of <e_a|P_eta|e_b>."""

    basis: BasisSet
    G: np.ndarray
    M: np.ndarray
    M_stderr: np.ndarray
    n: int
    eta: float
    sample_count: int
    weighting: str = "vacuum"
    batch_M: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        dim = len(self.basis)
        for name in ("G", "M", "M_stderr"):
            shape = getattr(self, name).shape
            if shape != (dim, dim):
                raise DimensionMismatchError((dim, dim), shape, f"GramOperatorPair.{name}")

    @property
    def K(self) -> int:
        return self.basis.K

    @property
    def batches(self) -> int:
        return 0 if self.batch_M is None else int(self.batch_M.shape[0])

    def save(self, path: Union[str, Path]) -> Path:
        """Write a self-describing npz archive (row-major, rows ordered as the basis)."""
        path = Path(path)
        arrays: Dict[str, Any] = {
            "exponents": self.basis.exponents,
            "G": self.G,
            "M": self.M,
            "M_stderr": self.M_stderr,
            "n": np.int64(self.n),
            "eta": np.float64(self.eta),
            "sample_count": np.int64(self.sample_count),
            "weighting": np.str_(self.weighting),
        }
        if self.batch_M is not None:
            arrays["batch_M"] = self.batch_M
        with path.open("wb") as handle:
            np.savez(handle, **arrays)
        logger.info("Saved operator matrices", extra={"path": str(path), "dimension": len(self.basis)})
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GramOperatorPair":
        with np.load(Path(path), allow_pickle=False) as data:
            exponents = data["exponents"]
            K = int(exponents.sum(axis=1).max()) if len(exponents) else 0
            basis = BasisSet.build(K)
            if not np.array_equal(basis.exponents, exponents):
                raise DimensionMismatchError(basis.exponents.shape, exponents.shape, "basis ordering")
            return cls(
                basis=basis,
                G=data["G"],
                M=data["M"],
                M_stderr=data["M_stderr"],
                n=int(data["n"]),
                eta=float(data["eta"]),
                sample_count=int(data["sample_count"]),
                weighting=str(data["weighting"]),
                batch_M=data["batch_M"] if "batch_M" in data.files else None,
            )


def _hermitize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def _coefficient_moment(lams: np.ndarray, x: np.ndarray, y: np.ndarray, basis: BasisSet,
                        n: int, weighting: str) -> np.ndarray:
    # sum over samples of c c^+ with (c c^+)_ab = c_a conj(c_b)
    values = monomial_values(lams.reshape(-1, 4), basis)
    if weighting == "flat":
        values = values * np.exp(0.5 * n * (np.log1p(-x) + np.log1p(-y)))[:, None]
    return values.T @ values.conj()


def operator_matrix_P_eta(
    n: int,
    K: int,
    eta: float,
    samples: int,
    rng: SeedLike = None,
    batches: Optional[int] = None,
    threads: Optional[int] = None,
    weighting: str = "vacuum",
) -> GramOperatorPair:
    """Estimate M = G C G with C = int_{D_eta} c(Lambda) c(Lambda)^+ dmu_n.

    ``weighting="vacuum"`` samples Lambda proportionally to q det(1-Lambda
    Lambda^+)^n and rescales by :func:`vacuum_mass`; ``"flat"`` samples q on
    [0, eta]^2 and rescales by T(n, eta). Cross-degree blocks of C are set to
    zero since P_eta commutes with the total photon number.

    Args:
        n: Modes per party (>= 6)
        K: Basis cutoff (>= 1)
        eta: Radius of the region, in (0, 1)
        samples: Total Monte-Carlo samples
        rng: Seed or generator; one substream per batch is derived from it
        batches: Number of batches (defaults to the ``batches`` setting)
        threads: Worker cap (defaults to the ``threads`` setting)
        weighting: "vacuum" or "flat"
    """
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6")
    if K < 1:
        raise ParameterDomainError("K", K, ">= 1")
    if not (0.0 < eta < 1.0):
        raise ParameterDomainError("eta", eta, "a value in (0, 1)")
    if weighting not in WEIGHTINGS:
        raise ParameterDomainError("weighting", weighting, f"one of {WEIGHTINGS}")
    batches = batches or config.get("batches")
    threads = threads or config.get_threads()
    if samples < batches:
        raise ParameterDomainError("samples", samples, f">= batches ({batches})")

    basis = BasisSet.build(K)
    dim = len(basis)
    if batches * dim * dim > MAX_BATCH_ENTRIES:
        raise ResourceLimitError("batch operator entries", batches * dim * dim, MAX_BATCH_ENTRIES)

    G = gram_matrix(n, K)
    mask = basis.same_degree_mask()
    scale = vacuum_mass(n, eta) if weighting == "vacuum" else volume_T(n, eta)
    chunk_size = config.get("chunk_size")
    counts = split_counts(samples, batches)

    def integrate_batch(index: int, generator: np.random.Generator) -> np.ndarray:
        moment = np.zeros((dim, dim), dtype=complex)
        remaining = counts[index]
        while remaining > 0:
            size = min(chunk_size, remaining)
            lams, x, y = sample_lambda_batch(eta, n, generator, size, weighting)
            moment += _coefficient_moment(lams, x, y, basis, n, weighting)
            remaining -= size
        C = np.where(mask, scale * moment / counts[index], 0.0)
        return _hermitize(G @ C @ G)

    with PerformanceLogger("operator_matrix_P_eta", logger, samples=samples):
        generators = spawn_generators(rng, batches)
        batch_M = np.stack(run_batches(integrate_batch, generators, threads))
        M, M_stderr = batch_mean_and_stderr(batch_M, weights=counts)

    logger.info(
        "Integrated P_eta",
        extra={"n": n, "K": K, "eta": eta, "samples": samples, "batches": batches, "weighting": weighting},
    )
    return GramOperatorPair(
        basis=basis,
        G=G,
        M=_hermitize(M),
        M_stderr=np.asarray(M_stderr, dtype=float),
        n=n,
        eta=eta,
        sample_count=samples,
        weighting=weighting,
        batch_M=batch_M,
    )


@dataclass(frozen=True)
class _Whitener:
    scale: np.ndarray
    W: np.ndarray
    condition: float

    def transform(self, M: np.ndarray) -> np.ndarray:
        prescaled = M * self.scale[:, None] * self.scale[None, :]
        return _hermitize(self.W @ prescaled @ self.W)


def _whitener(G: np.ndarray, max_condition: Optional[float] = None) -> _Whitener:
    limit = max_condition if max_condition is not None else config.get("max_condition")
    G = _hermitize(np.asarray(G, dtype=complex))
    dim = G.shape[0]
    diagonal = np.real(np.diag(G))
    if np.any(diagonal <= 0):
        raise IllConditionedGramError(math.inf, limit, dim)
    # unit-norm monomials before whitening
    scale = 1.0 / np.sqrt(diagonal)
    prescaled = G * scale[:, None] * scale[None, :]
    w, V = scipy.linalg.eigh(prescaled)
    if w.min() <= 0:
        raise IllConditionedGramError(math.inf, limit, dim)
    condition = float(w.max() / w.min())
    if condition > limit:
        raise IllConditionedGramError(condition, limit, dim)
    W = (V / np.sqrt(w)[None, :]) @ V.conj().T
    return _Whitener(scale=scale, W=W, condition=condition)


def generalized_eigenvalues(M: np.ndarray, G: np.ndarray, max_condition: Optional[float] = None
                            ) -> Tuple[np.ndarray, float]:
    """All eigenvalues of M v = lambda G v (ascending) and the prescaled Gram condition number."""
    if M.shape != G.shape:
        raise DimensionMismatchError(G.shape, M.shape, "generalized eigenproblem")
    whitener = _whitener(G, max_condition)
    eigs = scipy.linalg.eigvalsh(whitener.transform(np.asarray(M, dtype=complex)))
    return eigs, whitener.condition


def generalized_extremal_eigs(M: np.ndarray, G: np.ndarray, max_condition: Optional[float] = None
                              ) -> Tuple[float, float]:
    """(lambda_min, lambda_max) of M v = lambda G v.

    Raises:
        IllConditionedGramError: if G is not positive definite or its condition
            number after unit-norm prescaling exceeds ``max_condition``
    """
    eigs, _ = generalized_eigenvalues(M, G, max_condition)
    return float(eigs[0]), float(eigs[-1])


@dataclass
class DefinettiReport:
    """Outcome of one numerical certification of the finite-energy resolution of identity."""

    n: int
    K: int
    eta: float
    samples: int
    batches: int
    weighting: str
    lambda_min: float
    lambda_max: float
    lambda_min_stderr: float
    lambda_max_stderr: float
    gram_condition: float
    eps_theorem: LogReal
    eps_theorem_applicable: bool
    eps_exact: LogReal
    verdicts: Dict[str, Optional[bool]]
    pair: Optional[GramOperatorPair] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(v for v in self.verdicts.values() if v is not None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "K": self.K,
            "eta": self.eta,
            "samples": self.samples,
            "batches": self.batches,
            "weighting": self.weighting,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "lambda_min_stderr": self.lambda_min_stderr,
            "lambda_max_stderr": self.lambda_max_stderr,
            "gram_condition": self.gram_condition,
            "eps_theorem": self.eps_theorem.to_dict(),
            "eps_theorem_applicable": self.eps_theorem_applicable,
            "eps_exact": self.eps_exact.to_dict(),
            "verdicts": dict(self.verdicts),
            "passed": self.passed,
        }


def extremal_eig_stderr(pair: GramOperatorPair, max_condition: Optional[float] = None) -> Tuple[float, float]:
    """Standard errors of (lambda_min, lambda_max) from the whitened estimate.

    Weyl's inequality moves every generalized eigenvalue by at most
    ||W (M_hat - M) W||_2, so the error is measured in operator norm: the
    batch deviations ||A_b - A_bar||_2 of the whitened batch estimates give
    the batch-means error of A_bar. The same value serves both extremes; it
    dominates the spread of the per-batch extremal eigenvalues, which misses
    the outward bias noise puts on the extremes of a nearly flat spectrum.
    """
    if pair.batch_M is None or pair.batches < 2:
        return 0.0, 0.0
    whitener = _whitener(pair.G, max_condition)
    B = pair.batches
    whitened = [whitener.transform(Mb) for Mb in pair.batch_M]
    centre = whitener.transform(pair.M)
    deviations = np.array([np.linalg.norm(Ab - centre, 2) for Ab in whitened])
    operator_error = math.sqrt(float(np.sum(deviations ** 2)) / (B * (B - 1)))
    return operator_error, operator_error


def verify_definetti(
    n: int,
    K: int,
    eta: float,
    samples: int,
    rng: SeedLike = None,
    batches: Optional[int] = None,
    threads: Optional[int] = None,
    weighting: str = "vacuum",
    strict: bool = True,
) -> DefinettiReport:
    """Certify lambda_min(P_eta on V<=K) against the de Finetti error.

    Verdicts:
        ``upper``: lambda_max <= 1 + 3 sigma.
        ``theorem``: lambda_min >= 1 - eps_theorem - 3 sigma, only when
            eps_theorem < 1 and the theorem's precondition holds.
        ``exact``: lambda_min >= 1 - eps_exact - 3 sigma with the exact
            per-block error; always applicable.

    Raises:
        PreconditionError: if ``strict`` and K > eta N/(1-eta)
    """
    if n < 6:
        raise ParameterDomainError("n", n, ">= 6 so that N = n-5 >= 1")
    N = n - 5
    applicable = K <= eta * N / (1.0 - eta) * (1.0 + 1e-12)
    if strict and not applicable:
        raise PreconditionError(
            "verify_definetti", "K <= eta N/(1-eta)", {"n": n, "K": K, "eta": eta}
        )

    pair = operator_matrix_P_eta(n, K, eta, samples, rng, batches, threads, weighting)
    eigs, condition = generalized_eigenvalues(pair.M, pair.G)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    sigma_min, sigma_max = extremal_eig_stderr(pair)

    eps_theorem = definetti_epsilon(n, K, eta, strict=False)
    eps_exact = definetti_epsilon_exact(n, K, eta)
    theorem_verdict: Optional[bool] = None
    if applicable and not is_vacuous(eps_theorem):
        theorem_verdict = lam_min >= 1.0 - float(eps_theorem) - SIGMA_MARGIN * sigma_min
    verdicts = {
        "upper": lam_max <= 1.0 + SIGMA_MARGIN * sigma_max,
        "theorem": theorem_verdict,
        "exact": lam_min >= 1.0 - float(eps_exact) - SIGMA_MARGIN * sigma_min,
    }
    report = DefinettiReport(
        n=n,
        K=K,
        eta=eta,
        samples=samples,
        batches=pair.batches,
        weighting=weighting,
        lambda_min=lam_min,
        lambda_max=lam_max,
        lambda_min_stderr=sigma_min,
        lambda_max_stderr=sigma_max,
        gram_condition=condition,
        eps_theorem=eps_theorem,
        eps_theorem_applicable=applicable,
        eps_exact=eps_exact,
        verdicts=verdicts,
        pair=pair,
    )
    level = "info" if report.passed else "warning"
    getattr(logger, level)(
        "de Finetti certification finished",
        extra={"n": n, "K": K, "eta": eta, "lambda_min": lam_min, "passed": report.passed},
    )
    return report


def photon_block_via_gram(L: LambdaMatrix, n: int, K: int) -> float:
    """<Lambda, n|Pi_{=K}|Lambda, n> = det(1-Lambda Lambda^+)^n c_K^+ G_K c_K."""
    if n < 1:
        raise ParameterDomainError("n", n, ">= 1")
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    basis = BasisSet.build(K)
    block = basis.block_slice(K)
    values = monomial_values(L.entries[None, :], basis)[0, block]
    G_block = gram_matrix(n, K)[block, block]
    quadratic = np.real(values.conj() @ G_block @ values)
    return float(math.exp(n * log_det_defect(L)) * quadratic)


__all__ = [
    "MonomialIndex",
    "BasisSet",
    "dim_V_eq",
    "dim_V_leq",
    "gram_block_exact",
    "gram_matrix",
    "GramOperatorPair",
    "operator_matrix_P_eta",
    "generalized_eigenvalues",
    "generalized_extremal_eigs",
    "extremal_eig_stderr",
    "DefinettiReport",
    "verify_definetti",
    "photon_block_via_gram",
]
