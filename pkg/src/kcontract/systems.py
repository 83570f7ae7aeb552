"""Lurie and networked system descriptions, nonlinearity families, Jacobians.

A Lurie system is the feedback loop dx/dt = A x - B phi(t, C x); a networked
system is dx/dt = -alpha x + W f(x). Built-in nonlinearity families carry
exact Jacobians and certified gain bounds; user-declared bounds are trusted
and echoed into certificates as assumptions.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .compound import as_matrix
from .errors import (
    InvalidParameterError,
    ShapeError,
    UnboundedNonlinearityError,
)
from .measures import top_k_singular_sq_sum

__all__ = [
    "Nonlinearity",
    "LurieSystem",
    "NetworkSystem",
    "jacobian_closed_loop",
    "network_to_lurie",
    "evaluate_field",
    "jacobian_gain_bounds",
    "system_jacobian",
]

FAMILIES = ("scaled_tanh", "linear", "piecewise_table")


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """A feedback map phi(t, y) = premul @ base(y), with certified bounds.

    ``base`` is one of the built-in families; ``premul`` is an optional output
    matrix used when systems are rewritten between representations. Declared
    bounds always refer to the base map's Jacobian and are treated as
    certified facts supplied by the user; bounds for the composed map are
    derived from them. All built-in families ignore t.
    """

    family: str
    dim: int
    gain: float | None = None
    k_matrix: np.ndarray | None = None
    table_x: np.ndarray | None = None
    table_y: np.ndarray | None = None
    premul: np.ndarray | None = None
    declared_norm_bound: float | None = None
    declared_topk_sq_bound: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown nonlinearity family {self.family!r}")
        if self.dim < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {self.dim}")
        if self.premul is not None and self.premul.shape[1] != self.base_out_dim:
            raise ShapeError(
                f"premultiplier has {self.premul.shape[1]} columns, base map "
                f"outputs {self.base_out_dim}"
            )

    @classmethod
    def scaled_tanh(cls, gain: float, dim: int, **kw) -> "Nonlinearity":
        """Component-wise y -> gain * tanh(y)."""
        return cls(family="scaled_tanh", dim=dim, gain=float(gain), **kw)

    @classmethod
    def linear(cls, k_matrix, **kw) -> "Nonlinearity":
        """y -> K y with a constant matrix K."""
        k_matrix = as_matrix(k_matrix, name="K")
        return cls(family="linear", dim=k_matrix.shape[1], k_matrix=k_matrix, **kw)

    @classmethod
    def piecewise_table(cls, table_x, table_y, dim: int, **kw) -> "Nonlinearity":
        """Component-wise linear interpolation of a table, flat outside it.

        Simulation-grade only: certification requires declared Jacobian bounds.
        """
        xs = np.asarray(table_x, dtype=float)
        ys = np.asarray(table_y, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise InvalidParameterError("table needs matching 1-D x/y, length >= 2")
        if np.any(np.diff(xs) <= 0):
            raise InvalidParameterError("table breakpoints must be increasing")
        return cls(family="piecewise_table", dim=dim, table_x=xs, table_y=ys, **kw)

    # --- dimensions -------------------------------------------------------

    @property
    def base_out_dim(self) -> int:
        return self.k_matrix.shape[0] if self.family == "linear" else self.dim

    @property
    def out_dim(self) -> int:
        return self.premul.shape[0] if self.premul is not None else self.base_out_dim

    def with_premul(self, m) -> "Nonlinearity":
        """Compose an output matrix on the left: phi'(y) = m @ phi(y)."""
        m = as_matrix(m, name="premultiplier")
        if self.premul is not None:
            m = m @ self.premul
        return replace(self, premul=m)

    # --- evaluation -------------------------------------------------------

    def _base_eval(self, y: np.ndarray) -> np.ndarray:
        if self.family == "scaled_tanh":
            return self.gain * np.tanh(y)
        if self.family == "linear":
            return y @ self.k_matrix.T
        return np.interp(y, self.table_x, self.table_y)

    def evaluate(self, t: float, y) -> np.ndarray:
        """phi(t, y); y may carry leading batch axes."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim:
            raise ShapeError(f"input dim {y.shape[-1]} != {self.dim}")
        out = self._base_eval(y)
        if self.premul is not None:
            out = out @ self.premul.T
        return out

    def _base_diag(self, y: np.ndarray) -> np.ndarray:
        # diagonal of the base Jacobian for the component-wise families
        if self.family == "scaled_tanh":
            return self.gain / np.cosh(y) ** 2
        xs, ys = self.table_x, self.table_y
        seg = np.clip(np.searchsorted(xs, y) - 1, 0, len(xs) - 2)
        slopes = (ys[1:] - ys[:-1]) / (xs[1:] - xs[:-1])
        out = slopes[seg]
        out[(y < xs[0]) | (y > xs[-1])] = 0.0
        return out

    def jacobian(self, t: float, y) -> np.ndarray:
        """Jacobian of phi at (t, y), an out_dim x dim matrix."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ShapeError(f"expected a length-{self.dim} vector, got {y.shape}")
        if self.family == "linear":
            jac = self.k_matrix
        else:
            jac = np.diag(self._base_diag(y))
        return self.premul @ jac if self.premul is not None else jac.copy()

    # --- certified bounds -------------------------------------------------

    def constant_jacobian(self) -> np.ndarray | None:
        """The Jacobian when it does not depend on the input, else None."""
        if self.family != "linear":
            return None
        return self.premul @ self.k_matrix if self.premul is not None else self.k_matrix

    def base_norm_bound(self) -> float | None:
        """Certified sup of ||J_base||_2, combining implied and declared."""
        candidates = []
        if self.family == "scaled_tanh":
            candidates.append(abs(self.gain))
        elif self.family == "linear":
            candidates.append(float(np.linalg.norm(self.k_matrix, 2)))
        if self.declared_norm_bound is not None:
            candidates.append(float(self.declared_norm_bound))
        return min(candidates) if candidates else None

    def jac_norm_bound(self) -> float | None:
        """Certified sup of ||J_phi||_2 for the composed map, or None."""
        const = self.constant_jacobian()
        if const is not None:
            return float(np.linalg.norm(const, 2))
        base = self.base_norm_bound()
        if base is None:
            return None
        if self.premul is not None:
            base *= float(np.linalg.norm(self.premul, 2))
        return base

    def gain_bound_info(self, k: int) -> tuple[float, str]:
        """Certified upper bound on sup over (t, y) of the sum of the squares
        of the k largest singular values of J_phi, with a provenance note."""
        const = self.constant_jacobian()
        if const is not None:
            return (
                top_k_singular_sq_sum(const, min(k, min(const.shape))),
                "exact: constant Jacobian",
            )
        candidates = []
        base_l = self.base_norm_bound()
        declared_k = self.declared_topk_sq_bound.get(int(k))
        if self.premul is not None:
            pm_topk = top_k_singular_sq_sum(self.premul, min(k, min(self.premul.shape)))
            pm_norm_sq = float(np.linalg.norm(self.premul, 2)) ** 2
            if base_l is not None:
                candidates.append(
                    (
                        base_l**2 * pm_topk,
                        f"singular-value product chain: ||J_base|| <= {base_l:.6g} "
                        "through the output matrix",
                    )
                )
            if declared_k is not None:
                candidates.append(
                    (
                        pm_norm_sq * float(declared_k),
                        f"declared top-{k} bound {declared_k:.6g} through the "
                        "output matrix norm",
                    )
                )
        else:
            if base_l is not None:
                candidates.append(
                    (k * base_l**2, f"k * L^2 with L = {base_l:.6g}")
                )
            if declared_k is not None:
                candidates.append(
                    (float(declared_k), f"declared top-{k} bound")
                )
        if not candidates:
            raise UnboundedNonlinearityError(
                f"family {self.family!r} has no certified Jacobian bound; declare "
                "jac_norm_bound or jac_topk_sq_bound to certify"
            )
        return min(candidates, key=lambda c: c[0])


def jacobian_gain_bounds(phi: Nonlinearity, k: int) -> float:
    """Certified upper bound on sup_{t,y} of the top-k squared-singular-value
    sum of the feedback Jacobian."""
    return phi.gain_bound_info(k)[0]


@dataclass(frozen=True, eq=False)
class LurieSystem:
    """dx/dt = A x - B phi(t, C x); the feedthrough term is fixed to zero."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    phi: Nonlinearity

    def __post_init__(self):
        a = as_matrix(self.a, square=True, name="A")
        b = as_matrix(self.b, name="B")
        c = as_matrix(self.c, name="C")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        n = a.shape[0]
        if b.shape[0] != n:
            raise ShapeError(f"B has {b.shape[0]} rows, expected {n}")
        if c.shape[1] != n:
            raise ShapeError(f"C has {c.shape[1]} columns, expected {n}")
        if b.shape[1] != self.phi.out_dim:
            raise ShapeError(
                f"B has {b.shape[1]} columns but phi outputs {self.phi.out_dim}"
            )
        if c.shape[0] != self.phi.dim:
            raise ShapeError(
                f"C has {c.shape[0]} rows but phi takes {self.phi.dim} inputs"
            )

    @property
    def n(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True, eq=False)
class NetworkSystem:
    """dx/dt = -alpha x + W f(x) with a component-consistent activation f."""

    alpha: float
    w: np.ndarray
    f: Nonlinearity

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        w = as_matrix(self.w, square=True, name="W")
        object.__setattr__(self, "w", w)
        n = w.shape[0]
        if self.f.dim != n or self.f.out_dim != n:
            raise ShapeError(
                f"activation maps {self.f.dim} -> {self.f.out_dim}, expected {n} -> {n}"
            )

    @property
    def n(self) -> int:
        return self.w.shape[0]


def jacobian_closed_loop(sys: LurieSystem, t: float, x) -> np.ndarray:
    """Jacobian A - B J_phi(t, Cx) C of the closed loop at (t, x)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ShapeError(f"state must have length {sys.n}, got {x.shape}")
    jphi = sys.phi.jacobian(t, sys.c @ x)
    return sys.a - sys.b @ jphi @ sys.c


def network_jacobian(net: NetworkSystem, t: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n,):
        raise ShapeError(f"state must have length {net.n}, got {x.shape}")
    return -net.alpha * np.eye(net.n) + net.w @ net.f.jacobian(t, x)


def system_jacobian(sys, t: float, x) -> np.ndarray:
    """Jacobian of either system kind at (t, x)."""
    if isinstance(sys, NetworkSystem):
        return network_jacobian(sys, t, x)
    return jacobian_closed_loop(sys, t, x)


def network_to_lurie(net: NetworkSystem, gamma: float) -> LurieSystem:
    """Rewrite the network as the loop (A, B, C) = (-alpha I, gamma I, I) with
    feedback -gamma^-1 W f(y); the vector fields agree pointwise."""
    if not gamma > 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    n = net.n
    phi = net.f.with_premul((-1.0 / gamma) * net.w)
    return LurieSystem(
        a=-net.alpha * np.eye(n), b=gamma * np.eye(n), c=np.eye(n), phi=phi
    )


def evaluate_field(sys, t: float, x) -> np.ndarray:
    """Right-hand side of the ODE at (t, x) for either system kind."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ShapeError(f"state must have length {sys.n}, got {x.shape}")
    if isinstance(sys, NetworkSystem):
        return -sys.alpha * x + sys.w @ sys.f.evaluate(t, x)
    return sys.a @ x - sys.b @ sys.phi.evaluate(t, sys.c @ x)


def sim_arrays(sys) -> tuple:
    """Normalize a system to the kernel form dx = a0 x + b0 base(c0 x).

    Returns (a0, b0, c0, family_code, pw_x, pw_y); linear feedback folds into
    a0 with family code 0. Gains and premultipliers fold into b0.
    """
    from . import _kernels_py as codes

    empty = np.empty(0)
    if isinstance(sys, NetworkSystem):
        a_lin = -sys.alpha * np.eye(sys.n)
        out_gain = sys.w
        phi = sys.f
        c0 = np.eye(sys.n)
    else:
        a_lin = sys.a
        out_gain = -sys.b
        phi = sys.phi
        c0 = sys.c
    if phi.premul is not None:
        out_gain = out_gain @ phi.premul
    if phi.family == "linear":
        a0 = a_lin + out_gain @ phi.k_matrix @ c0
        return a0, np.zeros((sys.n, 0)), np.zeros((0, sys.n)), codes.FAMILY_LINEAR, empty, empty
    if phi.family == "scaled_tanh":
        return a_lin, phi.gain * out_gain, c0, codes.FAMILY_TANH, empty, empty
    return a_lin, out_gain, c0, codes.FAMILY_PIECEWISE, phi.table_x, phi.table_y
