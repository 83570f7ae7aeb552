"""Lexicographic k-index sets addressing compound-matrix rows and columns.

Index tuples use 1-based entries (the usual convention in the compound-matrix
literature); ranks are 0-based array positions. Every function documents which
side of that boundary it lives on.
"""

import math
from dataclasses import dataclass
from itertools import combinations

from .config import compound_cap
from .errors import CapacityError, InvalidRankError, InvalidTupleError, ShapeError

__all__ = ["LexIndex", "binomial", "enumerate_qkn", "rank", "unrank"]


@dataclass(frozen=True)
class LexIndex:
    """0-based lexicographic rank of a strictly increasing k-tuple from [1, n]."""

    rank: int
    k: int
    n: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ShapeError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0 <= self.rank < binomial(self.n, self.k):
            raise InvalidRankError(
                f"rank {self.rank} outside [0, C({self.n},{self.k})-1]"
            )


def binomial(n: int, k: int) -> int:
    """Exact C(n,k). Arbitrary-precision, so the only failure mode is bad input."""
    if k < 0 or n < 0 or k > n:
        raise ShapeError(f"binomial requires 0 <= k <= n, got n={n}, k={k}")
    return math.comb(n, k)


def _check_dims(k: int, n: int) -> None:
    if n < 1 or k < 1 or k > n:
        raise ShapeError(f"need 1 <= k <= n with n >= 1, got k={k}, n={n}")


def _check_cap(k: int, n: int) -> int:
    count = binomial(n, k)
    cap = compound_cap()
    if count > cap:
        raise CapacityError(
            f"C({n},{k}) = {count} exceeds the compound cap {cap}; "
            "raise KCONTRACT_MAX_COMPOUND to override"
        )
    return count


def validate_tuple(t, n: int) -> tuple:
    """Check strict increase and range; returns the tuple of ints (1-based)."""
    entries = tuple(int(v) for v in t)
    if len(entries) == 0:
        raise InvalidTupleError("empty index tuple")
    if any(a >= b for a, b in zip(entries, entries[1:])):
        raise InvalidTupleError(f"entries not strictly increasing: {entries}")
    if entries[0] < 1 or entries[-1] > n:
        raise InvalidTupleError(f"entries {entries} outside [1, {n}]")
    return entries


def enumerate_qkn(k: int, n: int) -> list:
    """All strictly increasing k-tuples from [1,n], lexicographically ordered."""
    _check_dims(k, n)
    _check_cap(k, n)
    return list(combinations(range(1, n + 1), k))


def rank(t, n: int) -> LexIndex:
    """Position of tuple ``t`` (1-based entries) in ``enumerate_qkn(len(t), n)``."""
    entries = validate_tuple(t, n)
    k = len(entries)
    _check_dims(k, n)
    r = 0
    prev = 0
    for slot, c in enumerate(entries):
        for v in range(prev + 1, c):
            r += binomial(n - v, k - slot - 1)
        prev = c
    return LexIndex(rank=r, k=k, n=n)


def unrank(r: LexIndex) -> tuple:
    """Inverse of :func:`rank`: the tuple at 0-based rank ``r.rank``."""
    remaining = r.rank
    out = []
    v = 1
    for slot in range(r.k):
        while True:
            block = binomial(r.n - v, r.k - slot - 1)
            if remaining < block:
                break
            remaining -= block
            v += 1
        out.append(v)
        v += 1
    return tuple(out)
