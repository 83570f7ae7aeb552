"""Pure-numpy kernel implementations.

This module is the fallback backend: `kcontract._kernels` (Cython) implements
the same three entry points with identical signatures and semantics. Keep the
two in lockstep.

Kernel protocol
---------------
minors(a, rows_idx, cols_idx)      -> (R, S) matrix of k x k subdeterminants
additive_apply(a, diag_idx, ...)   -> (R, R) additive compound from a plan
rk4_run(...)                       -> batched RK4 trajectories, optionally with
                                      tangent frames and scaled volumes
"""

import numpy as np

BACKEND_NAME = "python"

# nonlinearity family codes shared with the compiled kernel
FAMILY_LINEAR = 0
FAMILY_TANH = 1
FAMILY_PIECEWISE = 2


def minors(a: np.ndarray, rows_idx: np.ndarray, cols_idx: np.ndarray) -> np.ndarray:
    """All order-k minors of ``a`` for the given 0-based row/column index sets.

    rows_idx has shape (R, k), cols_idx (S, k); entry (r, s) of the result is
    det(a[rows_idx[r]][:, cols_idx[s]]). Direct cofactor formulas for k <= 3,
    LU with partial pivoting (numpy det) per submatrix beyond that.
    """
    k = rows_idx.shape[1]
    if k == 1:
        return a[rows_idx[:, 0][:, None], cols_idx[:, 0][None, :]].copy()
    if k == 2:
        r0 = rows_idx[:, 0][:, None]
        r1 = rows_idx[:, 1][:, None]
        c0 = cols_idx[:, 0][None, :]
        c1 = cols_idx[:, 1][None, :]
        return a[r0, c0] * a[r1, c1] - a[r0, c1] * a[r1, c0]
    if k == 3:
        r = [rows_idx[:, i][:, None] for i in range(3)]
        c = [cols_idx[:, j][None, :] for j in range(3)]
        return (
            a[r[0], c[0]] * (a[r[1], c[1]] * a[r[2], c[2]] - a[r[1], c[2]] * a[r[2], c[1]])
            - a[r[0], c[1]] * (a[r[1], c[0]] * a[r[2], c[2]] - a[r[1], c[2]] * a[r[2], c[0]])
            + a[r[0], c[2]] * (a[r[1], c[0]] * a[r[2], c[1]] - a[r[1], c[1]] * a[r[2], c[0]])
        )
    blocks = a[rows_idx[:, None, :, None], cols_idx[None, :, None, :]]
    return np.linalg.det(blocks)


def column_minors(x: np.ndarray, rows_idx: np.ndarray) -> np.ndarray:
    """Minors of a batch of tall matrices taking all k columns.

    x has shape (B, n, k); returns (B, R) with R = rows_idx.shape[0].
    """
    k = rows_idx.shape[1]
    if k == 1:
        return x[:, rows_idx[:, 0], 0]
    if k == 2:
        i0, i1 = rows_idx[:, 0], rows_idx[:, 1]
        return x[:, i0, 0] * x[:, i1, 1] - x[:, i0, 1] * x[:, i1, 0]
    blocks = x[:, rows_idx, :]
    return np.linalg.det(blocks)


def additive_apply(
    a: np.ndarray,
    diag_idx: np.ndarray,
    off_row: np.ndarray,
    off_col: np.ndarray,
    src_row: np.ndarray,
    src_col: np.ndarray,
    sign: np.ndarray,
) -> np.ndarray:
    """Assemble an additive compound from the precomputed sparsity plan.

    Entry (r, r) is the sum of a[i, i] over the r-th index set; entry
    (off_row[m], off_col[m]) is sign[m] * a[src_row[m], src_col[m]].
    """
    r = diag_idx.shape[0]
    out = np.zeros((r, r))
    out[off_row, off_col] = sign * a[src_row, src_col]
    out[np.arange(r), np.arange(r)] = a[diag_idx, diag_idx].sum(axis=1)
    return out


def _piecewise(y: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    # component-wise table lookup, flat extrapolation
    return np.interp(y, xs, ys)


def _piecewise_slope(y: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    seg = np.clip(np.searchsorted(xs, y) - 1, 0, len(xs) - 2)
    slopes = (ys[1:] - ys[:-1]) / (xs[1:] - xs[:-1])
    out = slopes[seg]
    out[(y < xs[0]) | (y > xs[-1])] = 0.0
    return out


def rk4_run(
    a0: np.ndarray,
    b0: np.ndarray,
    c0: np.ndarray,
    family: int,
    pw_x: np.ndarray,
    pw_y: np.ndarray,
    x0: np.ndarray,
    frame0: np.ndarray,
    qk: np.ndarray,
    rows_idx: np.ndarray,
    dt: float,
    record_steps: np.ndarray,
    div_norm: float,
    vol_floor: float,
):
    """Fixed-step RK4 on dx/dt = a0 x + b0 phi(c0 x) for a batch of trajectories.

    ``family`` selects phi: 0 linear (b0/c0 unused, pure dx = a0 x), 1 tanh,
    2 piecewise table (pw_x, pw_y). If ``frame0`` is non-empty, co-integrates
    the tangent frames dX/dt = J(x) X and records scaled volumes
    |qk @ minors(X)|_2 at every record step.

    Returns (states, frames, vols, diverge_step, collapse_step); recording
    happens at the step indices in ``record_steps`` (must start at 0, be
    strictly increasing, and end at the final step). Trajectories freeze once
    their norm passes ``div_norm``; diverge_step holds the offending step
    index or -1. collapse_step is the first record index with volume below
    ``vol_floor`` or -1.
    """
    batch, n = x0.shape
    with_frames = frame0.size > 0
    kf = frame0.shape[2] if with_frames else 0
    n_rec = record_steps.shape[0]
    n_steps = int(record_steps[-1])

    states = np.empty((n_rec, batch, n))
    frames = np.empty((n_rec, batch, n, kf)) if with_frames else np.empty((0, 0, 0, 0))
    vols = np.empty((n_rec, batch)) if with_frames else np.empty((0, 0))
    diverge_step = np.full(batch, -1, dtype=np.int64)
    collapse_step = np.full(batch, -1, dtype=np.int64)

    x = x0.copy()
    fr = frame0.copy() if with_frames else None
    active = np.ones(batch, dtype=bool)

    def field(xc):
        if family == FAMILY_LINEAR:
            return xc @ a0.T
        y = xc @ c0.T
        u = np.tanh(y) if family == FAMILY_TANH else _piecewise(y, pw_x, pw_y)
        return xc @ a0.T + u @ b0.T

    def jac_mul(xc, frc):
        # J(x) X without forming J: J = a0 + b0 diag(phi'(c0 x)) c0
        base = a0 @ frc
        if family == FAMILY_LINEAR:
            return base
        y = xc @ c0.T
        if family == FAMILY_TANH:
            d = 1.0 - np.tanh(y) ** 2  # sech^2 without cosh overflow
        else:
            d = _piecewise_slope(y, pw_x, pw_y)
        return base + b0 @ (d[:, :, None] * (c0 @ frc))

    def record(slot):
        states[slot] = x
        if with_frames:
            frames[slot] = fr
            xk = column_minors(fr, rows_idx)
            v = np.linalg.norm(xk @ qk.T, axis=1)
            vols[slot] = v
            fresh = (v < vol_floor) & (collapse_step < 0)
            collapse_step[fresh] = slot

    rec_pos = 0
    if record_steps[0] == 0:
        record(0)
        rec_pos = 1

    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(1, n_steps + 1):
        k1 = field(x)
        if with_frames:
            f1 = jac_mul(x, fr)
            f2 = jac_mul(x + half * k1, fr + half * f1)
        k2 = field(x + half * k1)
        if with_frames:
            f3 = jac_mul(x + half * k2, fr + half * f2)
        k3 = field(x + half * k2)
        if with_frames:
            f4 = jac_mul(x + dt * k3, fr + dt * f3)
        k4 = field(x + dt * k3)
        dx = sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if active.all():
            x = x + dx
            if with_frames:
                fr = fr + sixth * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        else:
            x = np.where(active[:, None], x + dx, x)
            if with_frames:
                fr = np.where(
                    active[:, None, None], fr + sixth * (f1 + 2.0 * f2 + 2.0 * f3 + f4), fr
                )
        blown = active & (np.linalg.norm(x, axis=1) > div_norm)
        if blown.any():
            diverge_step[blown] = step
            active &= ~blown
        if rec_pos < n_rec and step == record_steps[rec_pos]:
            record(rec_pos)
            rec_pos += 1

    return states, frames, vols, diverge_step, collapse_step
