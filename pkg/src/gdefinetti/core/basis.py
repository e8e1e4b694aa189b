"""Monomial basis of the truncated symmetric subspace V<=K."""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, NamedTuple, Tuple

import numpy as np

from .exceptions import ParameterDomainError

# Order of the pair operators inside a MonomialIndex and inside a flattened Lambda
PAIR_LABELS = ("11", "12", "21", "22")


class MonomialIndex(NamedTuple):
    """Exponents (i, j, k, l) of Z11^i Z12^j Z21^k Z22^l |0>."""

    i: int
    j: int
    k: int
    l: int

    @property
    def degree(self) -> int:
        return self.i + self.j + self.k + self.l

    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self)


def dim_V_eq(K: int) -> int:
    """dim V_{=K} = C(K+3, 3)."""
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    return math.comb(K + 3, 3)


def dim_V_leq(K: int) -> int:
    """dim V_{<=K} = C(K+4, 4)."""
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    return math.comb(K + 4, 4)


def _degree_block(d: int) -> Iterator[MonomialIndex]:
    # lexicographic on (i, j, k, l): Z22^d first, Z11^d last
    for i in range(d + 1):
        for j in range(d - i + 1):
            for k in range(d - i - j + 1):
                yield MonomialIndex(i, j, k, d - i - j - k)


@dataclass(frozen=True)
class BasisSet:
    """Graded ordering of all monomials of total degree <= K.

    Degree blocks are contiguous and ascending; inside a block exponent tuples are in
    ascending lexicographic order.
    """

    K: int
    indices: Tuple[MonomialIndex, ...]

    @classmethod
    def build(cls, K: int) -> "BasisSet":
        return _cached_basis(K)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[MonomialIndex]:
        return iter(self.indices)

    @property
    def exponents(self) -> np.ndarray:
        """Integer array of shape (dim, 4)."""
        return np.array(self.indices, dtype=np.int64).reshape(-1, 4)

    @property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    def position(self, index: MonomialIndex) -> int:
        return self._positions()[MonomialIndex(*index)]

    def block_slice(self, d: int) -> slice:
        """Rows of the degree-d block."""
        if not 0 <= d <= self.K:
            raise ParameterDomainError("d", d, f"a degree in [0, {self.K}]")
        start = dim_V_leq(d - 1) if d > 0 else 0
        return slice(start, start + dim_V_eq(d))

    def same_degree_mask(self) -> np.ndarray:
        """Boolean matrix, True where row and column have equal total degree."""
        degrees = self.degrees
        return degrees[:, None] == degrees[None, :]

    def _positions(self) -> Dict[MonomialIndex, int]:
        return _cached_positions(self.K)


@lru_cache(maxsize=32)
def _cached_basis(K: int) -> BasisSet:
    if K < 0:
        raise ParameterDomainError("K", K, ">= 0")
    indices: List[MonomialIndex] = []
    for d in range(K + 1):
        indices.extend(_degree_block(d))
    return BasisSet(K=K, indices=tuple(indices))


@lru_cache(maxsize=32)
def _cached_positions(K: int) -> Dict[MonomialIndex, int]:
    return {index: pos for pos, index in enumerate(_cached_basis(K).indices)}
