"""
Monte-Carlo plumbing shared by the operator integrator and the energy-test simulator.

Every stochastic routine takes an explicit seed or numpy Generator. Work is
split into batches, each batch owns a generator substream spawned from one
master SeedSequence, and batch results are always combined in batch order, so
the outcome does not depend on the number of worker threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy.stats import unitary_group

from .exceptions import ParameterDomainError

T = TypeVar("T")
SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Return a Generator for a seed, SeedSequence or existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_generators(seed: SeedLike, count: int) -> List[np.random.Generator]:
    """Independent generator substreams derived deterministically from ``seed``."""
    if count < 1:
        raise ParameterDomainError("count", count, ">= 1")
    if isinstance(seed, np.random.Generator):
        entropy = seed.integers(0, 2 ** 63, size=4, dtype=np.int64)
        sequence = np.random.SeedSequence([int(e) for e in entropy])
    elif isinstance(seed, np.random.SeedSequence):
        sequence = seed
    else:
        sequence = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in sequence.spawn(count)]


def split_counts(total: int, parts: int) -> List[int]:
    """Split ``total`` into ``parts`` near-equal non-negative counts."""
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def run_batches(
    work: Callable[[int, np.random.Generator], T],
    generators: Sequence[np.random.Generator],
    threads: int = 1,
) -> List[T]:
    """Evaluate ``work(batch_index, generator)`` for every batch, results in batch order."""
    if threads <= 1 or len(generators) == 1:
        return [work(i, rng) for i, rng in enumerate(generators)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(work, i, rng) for i, rng in enumerate(generators)]
        return [future.result() for future in futures]


def pairwise_sum(values: Sequence[Any]) -> Any:
    """Sum in a fixed balanced tree so the rounding pattern is reproducible."""
    if not values:
        raise ParameterDomainError("values", values, "a non-empty sequence")
    layer = list(values)
    while len(layer) > 1:
        paired = [layer[i] + layer[i + 1] for i in range(0, len(layer) - 1, 2)]
        if len(layer) % 2:
            paired.append(layer[-1])
        layer = paired
    return layer[0]


def batch_mean_and_stderr(batch_values: Sequence[Any], weights: Optional[Sequence[float]] = None
                          ) -> Tuple[Any, Any]:
    """Weighted mean over batches and the batch-means standard error.

    Complex entries get the standard error of real and imaginary parts combined.
    """
    stacked = np.asarray(batch_values)
    count = stacked.shape[0]
    if weights is None:
        w = np.full(count, 1.0 / count)
    else:
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
    mean = pairwise_sum([w[b] * stacked[b] for b in range(count)])
    if count < 2:
        return mean, np.zeros_like(np.abs(mean))
    deviations = np.abs(stacked - mean) ** 2
    variance = np.sum(deviations, axis=0) / (count - 1)
    return mean, np.sqrt(variance / count)


def haar_unitary(dim: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Haar-random unitaries of shape (dim, dim), or (size, dim, dim) when size is given."""
    if dim < 1:
        raise ParameterDomainError("dim", dim, ">= 1")
    count = 1 if size is None else size
    if dim == 1:
        phases = np.exp(2j * np.pi * rng.random(count)).reshape(count, 1, 1)
        return phases[0] if size is None else phases
    samples = unitary_group.rvs(dim, size=count, random_state=rng)
    samples = np.asarray(samples).reshape(count, dim, dim)
    return samples[0] if size is None else samples


def complex_normal(rng: np.random.Generator, shape: Tuple[int, ...], variance: Any = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with E|z|^2 = variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def haar_frame(dim: int, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """First two columns of Haar-random unitaries in U(dim), each of shape (size, dim)."""
    if dim < 2:
        raise ParameterDomainError("dim", dim, ">= 2")
    g1 = complex_normal(rng, (size, dim))
    g2 = complex_normal(rng, (size, dim))
    e1 = g1 / np.linalg.norm(g1, axis=1, keepdims=True)
    g2 = g2 - np.sum(e1.conj() * g2, axis=1, keepdims=True) * e1
    e2 = g2 / np.linalg.norm(g2, axis=1, keepdims=True)
    return e1, e2


def wilson_interval(successes: int, trials: int, z: float = 3.0) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ParameterDomainError("trials", trials, ">= 1")
    p_hat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p_hat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def complex_wishart_2x2(rng: np.random.Generator, dof: int, size: int) -> np.ndarray:
    """Samples of G^+ G for G an (dof x 2) matrix of unit-variance circular Gaussians.

    Uses the Bartlett factor L = [[a, 0], [z, b]] with a^2 ~ Gamma(dof),
    b^2 ~ Gamma(dof - 1) and z ~ CN(0, 1); returns L L^+ with shape (size, 2, 2).
    """
    if dof < 1:
        raise ParameterDomainError("dof", dof, ">= 1")
    a = np.sqrt(rng.gamma(dof, 1.0, size))
    b = np.sqrt(rng.gamma(dof - 1, 1.0, size)) if dof > 1 else np.zeros(size)
    z = complex_normal(rng, (size,))
    factor = np.zeros((size, 2, 2), dtype=complex)
    factor[:, 0, 0] = a
    factor[:, 1, 0] = z
    factor[:, 1, 1] = b
    return factor @ np.conj(np.swapaxes(factor, 1, 2))
