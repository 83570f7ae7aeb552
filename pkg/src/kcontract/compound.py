"""Multiplicative and additive compound matrices and parallelotope volumes.

The k-th multiplicative compound of an n x m matrix collects all its order-k
minors in lexicographic order; the k-th additive compound is the derivative of
(I + eps*A)^(k) at eps = 0, evaluated here by its closed-form sparsity rule and
cross-checked in tests against the central-difference oracle.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from ._backend import kernels
from .errors import ShapeError
from .indexsets import binomial, _check_cap

__all__ = [
    "CompoundMatrix",
    "multiplicative_compound",
    "additive_compound",
    "finite_diff_additive",
    "volume_parallelotope",
]


@dataclass(frozen=True)
class CompoundMatrix:
    """Order-k compound of a base matrix, with its provenance dimensions."""

    base_rows: int
    base_cols: int
    order: int
    body: np.ndarray

    def __post_init__(self):
        r = binomial(self.base_rows, self.order)
        s = binomial(self.base_cols, self.order)
        if self.body.shape != (r, s):
            raise ShapeError(
                f"compound body shape {self.body.shape} != ({r}, {s}) for "
                f"order {self.order} of a {self.base_rows}x{self.base_cols} base"
            )


def as_matrix(a, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (the library's Matrix carrier)."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise ShapeError(f"{name} contains NaN or Inf entries")
    if square and out.shape[0] != out.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {out.shape}")
    return out


@lru_cache(maxsize=256)
def index_arrays(n: int, k: int) -> np.ndarray:
    """(C(n,k), k) array of 0-based strictly increasing index sets, lex order."""
    return np.array(list(combinations(range(n), k)), dtype=np.intp)


@lru_cache(maxsize=128)
def _additive_plan(n: int, k: int):
    """Sparsity plan for the additive compound of an n x n matrix.

    Off-diagonal entries live exactly where two index sets differ in a single
    member; the sign alternates with the (0-based) slot positions of the
    differing members.
    """
    tuples = list(combinations(range(n), k))
    rank_of = {t: i for i, t in enumerate(tuples)}
    off_row, off_col, src_row, src_col, sign = [], [], [], [], []
    for i, kappa in enumerate(tuples):
        members = set(kappa)
        for s, drop in enumerate(kappa):
            for v in range(n):
                if v in members:
                    continue
                lam = sorted(members - {drop} | {v})
                t = lam.index(v)
                off_row.append(i)
                off_col.append(rank_of[tuple(lam)])
                src_row.append(drop)
                src_col.append(v)
                sign.append(1.0 if (s + t) % 2 == 0 else -1.0)
    as_i = lambda x: np.asarray(x, dtype=np.intp)
    return (
        np.array(tuples, dtype=np.intp),
        as_i(off_row),
        as_i(off_col),
        as_i(src_row),
        as_i(src_col),
        np.asarray(sign),
    )


def _check_order(k: int, limit: int) -> None:
    if not 1 <= int(k) <= limit:
        raise ShapeError(f"compound order k={k} outside [1, {limit}]")


def multiplicative_compound(a, k: int) -> CompoundMatrix:
    """k-th multiplicative compound: the C(n,k) x C(m,k) matrix of order-k minors.

    Rows and columns are both addressed in lexicographic index-set order, so
    entry (rank(rows), rank(cols)) is the determinant of the submatrix picking
    those rows and columns. For square a and k = n this is the 1x1 [det(a)].
    """
    a = as_matrix(a)
    n, m = a.shape
    _check_order(k, min(n, m))
    _check_cap(k, n)
    _check_cap(k, m)
    body = kernels.minors(a, index_arrays(n, k), index_arrays(m, k))
    return CompoundMatrix(base_rows=n, base_cols=m, order=k, body=body)


def additive_compound(a, k: int) -> CompoundMatrix:
    """k-th additive compound of a square matrix (closed-form evaluation)."""
    a = as_matrix(a, square=True)
    n = a.shape[0]
    _check_order(k, n)
    _check_cap(k, n)
    body = kernels.additive_apply(a, *_additive_plan(n, k))
    return CompoundMatrix(base_rows=n, base_cols=n, order=k, body=body)


def finite_diff_additive(a, k: int, eps: float = 1e-6) -> CompoundMatrix:
    """Central-difference evaluation of the additive compound; testing oracle.

    Computes [(I + eps*A)^(k) - (I - eps*A)^(k)] / (2 eps), which converges to
    the additive compound as eps -> 0.
    """
    a = as_matrix(a, square=True)
    if eps <= 0:
        raise ShapeError(f"eps must be positive, got {eps}")
    n = a.shape[0]
    eye = np.eye(n)
    plus = multiplicative_compound(eye + eps * a, k).body
    minus = multiplicative_compound(eye - eps * a, k).body
    return CompoundMatrix(n, n, k, (plus - minus) / (2.0 * eps))


def volume_parallelotope(x) -> float:
    """Volume of the parallelotope spanned by the columns of an n x k matrix.

    Equals the Euclidean norm of the C(n,k)-entry column of order-k minors,
    which coincides with sqrt(det(X^T X)).
    """
    x = as_matrix(x)
    n, k = x.shape
    if k > n:
        raise ShapeError(f"need at most as many columns as rows, got {x.shape}")
    body = multiplicative_compound(x, k).body
    return float(np.linalg.norm(body[:, 0]))
