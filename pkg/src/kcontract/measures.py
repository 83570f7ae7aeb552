"""Matrix measures induced by the (scaled) L2 norm, and spectral-sum helpers."""

from dataclasses import dataclass

import numpy as np

from .compound import as_matrix, multiplicative_compound
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    NotPositiveDefiniteError,
    NotSymmetricError,
    ShapeError,
    SingularScalingError,
)

__all__ = [
    "ScalingQ",
    "mu2",
    "mu2_scaled",
    "symmetric_sqrt",
    "top_k_eig_sum",
    "top_k_singular_sq_sum",
]


def _check_symmetric(s: np.ndarray, tol: Tolerances) -> np.ndarray:
    asym = np.linalg.norm(s - s.T, 2)
    scale = 1.0 + np.linalg.norm(s, 2)
    if asym > tol.sym_rel * scale:
        raise NotSymmetricError(
            f"asymmetry {asym:.3e} exceeds {tol.sym_rel:.1e} * (1 + ||S||)"
        )
    return 0.5 * (s + s.T)


def mu2(a) -> float:
    """L2 matrix measure (logarithmic norm): half the largest eigenvalue of A + A^T."""
    a = as_matrix(a, square=True)
    return 0.5 * float(np.linalg.eigvalsh(a + a.T)[-1])


def mu2_scaled(a, h, tol: Tolerances = DEFAULT_TOL) -> float:
    """Matrix measure induced by |x|_{2,H} = |Hx|_2, i.e. mu2(H A H^-1)."""
    a = as_matrix(a, square=True)
    h = as_matrix(h, square=True, name="scaling")
    if h.shape != a.shape:
        raise ShapeError(f"scaling shape {h.shape} != matrix shape {a.shape}")
    cond = np.linalg.cond(h, 2)
    if not np.isfinite(cond) or cond > tol.cond_cap:
        raise SingularScalingError(
            f"scaling condition number {cond:.3e} exceeds cap {tol.cond_cap:.1e}"
        )
    scaled = np.linalg.solve(h.T, (h @ a).T).T  # (H A) H^-1
    return mu2(scaled)


@dataclass(frozen=True)
class ScalingQ:
    """Symmetric positive-definite scaling Q together with P = Q Q."""

    q: np.ndarray
    p: np.ndarray

    @classmethod
    def from_q(cls, q, tol: Tolerances = DEFAULT_TOL) -> "ScalingQ":
        q = as_matrix(q, square=True, name="Q")
        q = _check_symmetric(q, tol)
        eigs = np.linalg.eigvalsh(q)
        if eigs[0] <= tol.spd_floor * max(eigs[-1], 0.0):
            raise NotPositiveDefiniteError(
                f"Q has non-positive eigenvalue {eigs[0]:.3e}"
            )
        return cls(q=q, p=q @ q)

    @classmethod
    def identity(cls, n: int) -> "ScalingQ":
        return cls(q=np.eye(n), p=np.eye(n))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def q_inv(self) -> np.ndarray:
        return np.linalg.inv(self.q)

    def q_compound(self, k: int) -> np.ndarray:
        """Multiplicative compound of Q; the square root of the compound of P."""
        return multiplicative_compound(self.q, k).body


def symmetric_sqrt(p, tol: Tolerances = DEFAULT_TOL) -> ScalingQ:
    """Unique SPD square root of an SPD matrix, via eigendecomposition."""
    p = as_matrix(p, square=True, name="P")
    p = _check_symmetric(p, tol)
    eigs, vecs = np.linalg.eigh(p)
    if eigs[0] <= tol.spd_floor * max(eigs[-1], 0.0):
        raise NotPositiveDefiniteError(
            f"P is not positive definite: min eigenvalue {eigs[0]:.3e} "
            f"vs max {eigs[-1]:.3e}"
        )
    q = (vecs * np.sqrt(eigs)) @ vecs.T
    return ScalingQ(q=0.5 * (q + q.T), p=p)


def top_k_eig_sum(s, k: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """Sum of the k largest eigenvalues of a symmetric matrix."""
    s = as_matrix(s, square=True)
    n = s.shape[0]
    if not 1 <= int(k) <= n:
        raise ShapeError(f"k={k} outside [1, {n}]")
    s = _check_symmetric(s, tol)
    eigs = np.linalg.eigvalsh(s)
    return float(eigs[n - k:].sum())


def top_k_singular_sq_sum(a, k: int) -> float:
    """Sum of squares of the k largest singular values."""
    a = as_matrix(a)
    if not 1 <= int(k) <= min(a.shape):
        raise ShapeError(f"k={k} outside [1, {min(a.shape)}]")
    sv = np.linalg.svd(a, compute_uv=False)
    return float((sv[:k] ** 2).sum())
