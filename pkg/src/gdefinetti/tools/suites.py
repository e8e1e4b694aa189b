"""
Verification suites behind ``gdefinetti verify``.

Each suite runs one family of numerical checks and returns a report
dictionary with one entry per check: its name, whether it passed (``None``
when the check does not apply) and a signed margin that is non-negative
exactly when the check holds.
"""

import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..core.basis import BasisSet
from ..core.exceptions import ParameterDomainError
from ..core.fockoracle import (
    gram_oracle,
    invariance_check,
    lgrc_sweep,
    t_eigenvalue_quadrature,
    t_operator_eigenvalue,
)
from ..core.mathkit import (
    chernoff_tail_bound,
    pinsker_lower_bound,
    reg_beta_tail_bound,
    reg_beta_tail_exact,
    rel_entropy,
)
from ..core.montecarlo import SeedLike, spawn_generators
from ..core.subspace import SIGMA_MARGIN, DefinettiReport, gram_matrix, verify_definetti
from ..enhancements.logging import PerformanceLogger, get_logger
from .reporting import summarize_checks

logger = get_logger(__name__)

SUITES = ("definetti", "gram", "tails", "lgrc", "invariance")

GRAM_TOLERANCE = 1e-9
LOG_TOLERANCE = 1e-9
QUADRATURE_TOLERANCE = 1e-8
INVARIANCE_TOLERANCE = 1e-10


def check(name: str, passed: Optional[bool], margin: Optional[float], **values: Any) -> Dict[str, Any]:
    """One entry of a report's ``checks`` list."""
    entry: Dict[str, Any] = {"name": name, "passed": passed, "margin": margin}
    entry.update(values)
    return entry


def suite_report(suite: str, seed: Optional[int], parameters: Dict[str, Any],
                 checks: List[Dict[str, Any]], **extra: Any) -> Dict[str, Any]:
    report = {
        "kind": "verify",
        "suite": suite,
        "seed": seed,
        "parameters": parameters,
        "checks": checks,
        "passed": summarize_checks(checks),
    }
    report.update(extra)
    return report


def definetti_checks(result: DefinettiReport) -> List[Dict[str, Any]]:
    """Margins of the three eigenvalue verdicts of a de Finetti certification."""
    upper_margin = 1.0 + SIGMA_MARGIN * result.lambda_max_stderr - result.lambda_max
    slack = SIGMA_MARGIN * result.lambda_min_stderr
    theorem_margin = None
    if result.verdicts["theorem"] is not None:
        theorem_margin = result.lambda_min - (1.0 - float(result.eps_theorem) - slack)
    exact_margin = result.lambda_min - (1.0 - float(result.eps_exact) - slack)
    return [
        check("lambda_max_upper", result.verdicts["upper"], upper_margin, value=result.lambda_max),
        check("lambda_min_theorem", result.verdicts["theorem"], theorem_margin, value=result.lambda_min),
        check("lambda_min_exact", result.verdicts["exact"], exact_margin, value=result.lambda_min),
    ]


def run_definetti_suite(n: int, K: int, eta: float, samples: int, seed: int,
                        batches: Optional[int] = None, threads: Optional[int] = None,
                        weighting: str = "vacuum", strict: bool = True) -> Tuple[Dict[str, Any], DefinettiReport]:
    """Certify the finite-energy resolution of identity on V<=K at one radius.

    Returns the report together with the raw result, whose operator pair
    can be exported.
    """
    result = verify_definetti(n, K, eta, samples, seed, batches, threads, weighting, strict)
    parameters = {
        "n": n,
        "K": K,
        "eta": eta,
        "samples": samples,
        "batches": result.batches,
        "weighting": weighting,
        "strict": strict,
    }
    report = suite_report("definetti", seed, parameters, definetti_checks(result), result=result.to_dict())
    report["result"].pop("passed")
    return report, result


def run_gram_suite(n_values: Sequence[int], K: int) -> Dict[str, Any]:
    """Closed-form Gram matrix against inner products of explicit Fock vectors."""
    checks = []
    for n in n_values:
        with PerformanceLogger(f"gram_check_n{n}", logger):
            series = gram_matrix(n, K)
            oracle = gram_oracle(n, K)
        deviation = float(np.max(np.abs(series - oracle) / np.maximum(np.abs(series), 1.0)))
        checks.append(check(
            f"gram_n{n}_K{K}",
            deviation <= GRAM_TOLERANCE,
            GRAM_TOLERANCE - deviation,
            max_relative_deviation=deviation,
            dimension=int(series.shape[0]),
        ))
    return suite_report("gram", None, {"n": list(n_values), "K": K, "tolerance": GRAM_TOLERANCE}, checks)


def _log_gap(bound, exact) -> float:
    # log(bound) - log(exact), with an exact zero dominated by anything
    if exact.is_zero:
        return math.inf
    if bound.is_zero:
        return -math.inf
    return bound.log_magnitude - exact.log_magnitude


def _dominance_check(name: str, gaps: Iterable[float], **values: Any) -> Dict[str, Any]:
    gaps = list(gaps)
    violations = sum(1 for gap in gaps if gap < -LOG_TOLERANCE)
    finite = [gap for gap in gaps if math.isfinite(gap)]
    margin = min(finite) if finite else None
    return check(name, violations == 0, margin, evaluated=len(gaps), violations=violations, **values)


def reg_beta_gaps(k_max: int, n_max: int, etas: Sequence[float], n_step: int = 1) -> List[float]:
    """log(bound) - log(exact) for 1 - I_eta(k, n) wherever the Chernoff bound applies."""
    gaps = []
    for k in range(1, k_max + 1):
        for n in range(1, n_max + 1, n_step):
            threshold = (k - 1) / (n + k - 1)
            for eta in etas:
                if eta < threshold:
                    continue
                gaps.append(_log_gap(reg_beta_tail_bound(eta, k, n), reg_beta_tail_exact(eta, k, n)))
    return gaps


def chernoff_gaps(n_max: int, probabilities: Sequence[float], offsets: Sequence[float],
                  n_step: int = 1) -> List[float]:
    """log(bound) - log(exact) for Pr[Bin(n, p) >= (p+t) n]."""
    gaps = []
    for n in range(1, n_max + 1, n_step):
        for p in probabilities:
            for t in offsets:
                if t > 1.0 - p:
                    continue
                smallest = math.ceil((p + t) * n - 1e-12)
                exact = float(stats.binom.logsf(smallest - 1, n, p))
                bound = chernoff_tail_bound(n, p, t)
                if math.isinf(exact):
                    gaps.append(math.inf)
                else:
                    gaps.append(bound.log_magnitude - exact if not bound.is_zero else -math.inf)
    return gaps


def pinsker_gaps(points: int) -> List[float]:
    grid = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return [rel_entropy(x, y) - pinsker_lower_bound(x, y) for x in grid for y in grid]


def run_tails_suite(k_max: int = 50, n_max: int = 500, eta_points: int = 9, n_step: int = 1,
                    pinsker_points: int = 100) -> Dict[str, Any]:
    """Dominance of every tail bound over its exact value on a grid."""
    if eta_points < 1 or pinsker_points < 1:
        raise ParameterDomainError("grid points", (eta_points, pinsker_points), ">= 1")
    etas = [float(e) for e in np.linspace(0.0, 1.0, eta_points + 2)[1:-1]]
    offsets = [0.01, 0.05, 0.1, 0.2, 0.4]
    with PerformanceLogger("tails_suite", logger):
        checks = [
            _dominance_check("reg_beta_tail_bound", reg_beta_gaps(k_max, n_max, etas, n_step)),
            _dominance_check("chernoff_tail_bound", chernoff_gaps(n_max, etas, offsets, n_step)),
        ]
        pinsker = pinsker_gaps(pinsker_points)
        violations = sum(1 for gap in pinsker if gap < -1e-15)
        checks.append(check("pinsker", violations == 0, min(pinsker),
                            evaluated=len(pinsker), violations=violations))
    parameters = {
        "k_max": k_max,
        "n_max": n_max,
        "n_step": n_step,
        "etas": etas,
        "offsets": offsets,
        "pinsker_points": pinsker_points,
    }
    return suite_report("tails", None, parameters, checks)


def run_lgrc_suite(n_max: int = 50, d_max: float = 20.0, d_step: float = 0.5, extra: int = 500,
                   quadrature_M: int = 30) -> Dict[str, Any]:
    """U <= 2T on Fock eigenvalues, plus a single-mode quadrature check of Q(M+1, d)."""
    d_values = [float(d) for d in np.arange(d_step, d_max + d_step / 2, d_step)]
    sweep = lgrc_sweep(range(1, n_max + 1), d_values, extra)
    margins = [r.min_margin for r in sweep if r.min_margin is not None]
    violations = sum(r.violations for r in sweep)
    worst = min(sweep, key=lambda r: math.inf if r.min_margin is None else r.min_margin)
    checks = [check(
        "u_le_2t",
        violations == 0,
        min(margins) if margins else None,
        checked=sum(r.checked for r in sweep),
        violations=violations,
        worst=worst.to_dict(),
    )]

    deviation = 0.0
    for d in (0.0, 0.5, 2.0, 7.5, 20.0):
        for M in range(quadrature_M + 1):
            deviation = max(deviation, abs(t_eigenvalue_quadrature(M, d) - t_operator_eigenvalue(M, 1, d)))
    checks.append(check("single_mode_quadrature", deviation <= QUADRATURE_TOLERANCE,
                        QUADRATURE_TOLERANCE - deviation, max_deviation=deviation))
    parameters = {"n_max": n_max, "d_max": d_max, "d_step": d_step, "extra": extra,
                  "quadrature_M": quadrature_M}
    return suite_report("lgrc", None, parameters, checks)


def run_invariance_suite(n: int, K: int, trials: int, seed: SeedLike) -> Dict[str, Any]:
    """Every monomial vector of degree <= K must be fixed by W_u for Haar-random u."""
    basis = BasisSet.build(K)
    generators = spawn_generators(seed, len(basis))
    worst: Dict[int, float] = {}
    for idx, generator in zip(basis, generators):
        deviation = invariance_check(n, idx, trials, generator)
        worst[idx.degree] = max(worst.get(idx.degree, 0.0), deviation)
    checks = [
        check(f"degree_{degree}", deviation <= INVARIANCE_TOLERANCE,
              INVARIANCE_TOLERANCE - deviation, max_deviation=deviation)
        for degree, deviation in sorted(worst.items())
    ]
    parameters = {"n": n, "K": K, "trials": trials, "tolerance": INVARIANCE_TOLERANCE}
    return suite_report("invariance", seed, parameters, checks)
