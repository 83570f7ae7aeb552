"""Trajectory integration with tangent-frame volume tracking.

Fixed-step RK4 on the system field, optionally co-integrating the variational
equation dX/dt = J(t, x(t)) X on a frame of k tangent vectors. The recorded
volume series |Q^(k) (X(t))^(k)|_2 is the scaled k-dimensional parallelotope
volume whose decay a passing certificate guarantees. Frames are deliberately
not re-orthonormalized: the raw compound norm is the quantity certified, and
re-normalization would falsify the measured rate.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .compound import index_arrays
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DivergenceError,
    InsufficientDataError,
    InvalidParameterError,
    InvalidRankError,
    KContractError,
    ShapeError,
    WrongStructureError,
)
from .measures import ScalingQ
from .systems import NetworkSystem, evaluate_field, sim_arrays

__all__ = [
    "Trajectory",
    "EquilibriumSet",
    "integrate",
    "integrate_with_variational",
    "integrate_ensemble",
    "estimate_decay_rate",
    "hopfield_symmetric_equilibria",
    "classify_convergence",
]


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution, with optional tangent frames and volume series.

    ``volumes`` holds raw (not log) scaled volumes. ``diverged`` marks runs
    frozen by the norm guard; ``collapse_time`` the first sample whose volume
    fell below the underflow floor. Recorded samples stay valid either way.
    """

    times: np.ndarray
    states: np.ndarray
    frames: np.ndarray | None = None
    volumes: np.ndarray | None = None
    diverged: bool = False
    escape_time: float | None = None
    collapse_time: float | None = None

    def __post_init__(self):
        t = len(self.times)
        for name in ("states", "frames", "volumes"):
            series = getattr(self, name)
            if series is not None and len(series) != t:
                raise ShapeError(f"{name} has {len(series)} samples, times has {t}")


@dataclass(frozen=True)
class EquilibriumSet:
    """Equilibrium points (rows) together with the residual bound they meet."""

    points: np.ndarray
    residual_tol: float

    def __len__(self) -> int:
        return self.points.shape[0]


def _step_grid(t_end: float, dt: float, record_every):
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if not t_end > 0:
        raise InvalidParameterError(f"t_end must be positive, got {t_end}")
    n_steps = max(1, int(round(t_end / dt)))
    if record_every is None:
        record_every = max(1, n_steps // 2000)
    record_every = int(record_every)
    if record_every < 1:
        raise InvalidParameterError("record_every must be >= 1")
    steps = np.arange(0, n_steps + 1, record_every, dtype=np.int64)
    if steps[-1] != n_steps:
        steps = np.append(steps, np.int64(n_steps))
    return n_steps, steps


def _run(sys, x0s, frame0, qk, rows_idx, t_end, dt, record_every, tol):
    _, record_steps = _step_grid(t_end, dt, record_every)
    a0, b0, c0, family, pw_x, pw_y = sim_arrays(sys)
    out = kernels.rk4_run(
        a0, b0, c0, family, pw_x, pw_y,
        x0s, frame0, qk, rows_idx,
        float(dt), record_steps, tol.divergence_norm, tol.volume_floor,
    )
    times = record_steps.astype(float) * dt
    return (times,) + out


def _as_state(sys, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ShapeError(f"x0 must have shape ({sys.n},), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise InvalidParameterError("x0 must be finite")
    return x0


def integrate(
    sys, x0, t_end: float, dt: float = 1e-3,
    record_every=None, tol: Tolerances = DEFAULT_TOL,
) -> Trajectory:
    """Fixed-step RK4 solution from a single initial state.

    Deterministic for fixed inputs. Raises a divergence error, reporting the
    escape time, once the state norm passes the guard.
    """
    x0 = _as_state(sys, x0)
    no_frame = np.zeros((1, sys.n, 0))
    times, states, _, _, diverge, _ = _run(
        sys, x0[None, :], no_frame, np.eye(1), np.zeros((1, 0), dtype=np.intp),
        t_end, dt, record_every, tol,
    )
    if diverge[0] >= 0:
        raise DivergenceError(
            f"state norm exceeded {tol.divergence_norm:g}",
            escape_time=float(diverge[0] * dt),
        )
    return Trajectory(times=times, states=states[:, 0, :])


def integrate_with_variational(
    sys, x0, x0_frame, q: ScalingQ, t_end: float, dt: float = 1e-3,
    record_every=None, tol: Tolerances = DEFAULT_TOL,
) -> Trajectory:
    """Co-integrate the state and a k-column tangent frame, recording the
    scaled parallelotope volume |Q^(k) X^(k)(t)|_2 at every sample.

    Rank collapse (volume under the underflow floor) is flagged on the
    trajectory, not raised; divergence raises as in plain integration.
    """
    x0 = _as_state(sys, x0)
    frame = np.asarray(x0_frame, dtype=float)
    if frame.ndim != 2 or frame.shape[0] != sys.n:
        raise ShapeError(f"frame must be {sys.n} x k, got {frame.shape}")
    k = frame.shape[1]
    if not 1 <= k <= sys.n:
        raise ShapeError(f"frame width {k} outside [1, {sys.n}]")
    if np.linalg.matrix_rank(frame) < k:
        raise InvalidRankError("initial frame must have full column rank")
    if q.n != sys.n:
        raise ShapeError(f"scaling is {q.n}-dimensional, system is {sys.n}")

    rows_idx = index_arrays(sys.n, k)
    times, states, frames, vols, diverge, collapse = _run(
        sys, x0[None, :], frame[None, :, :], q.q_compound(k), rows_idx,
        t_end, dt, record_every, tol,
    )
    if diverge[0] >= 0:
        raise DivergenceError(
            f"state norm exceeded {tol.divergence_norm:g}",
            escape_time=float(diverge[0] * dt),
        )
    collapse_time = float(times[collapse[0]]) if collapse[0] >= 0 else None
    return Trajectory(
        times=times,
        states=states[:, 0, :],
        frames=frames[:, 0, :, :],
        volumes=vols[:, 0],
        collapse_time=collapse_time,
    )


def integrate_ensemble(
    sys, x0s, t_end: float, dt: float = 1e-3,
    x0_frame=None, q: ScalingQ | None = None,
    record_every=None, tol: Tolerances = DEFAULT_TOL,
) -> list:
    """Integrate a batch of initial states in one vectorized run.

    Results are ordered as the inputs. Divergent members are frozen and
    flagged rather than raised so one bad run cannot abort a batch; shared
    ``x0_frame`` (and optional scaling) enables volume tracking for all runs.
    """
    x0s = np.asarray(x0s, dtype=float)
    if x0s.ndim != 2 or x0s.shape[1] != sys.n:
        raise ShapeError(f"x0s must be B x {sys.n}, got {x0s.shape}")
    if not np.all(np.isfinite(x0s)):
        raise InvalidParameterError("initial states must be finite")
    batch = x0s.shape[0]

    if x0_frame is not None:
        frame = np.asarray(x0_frame, dtype=float)
        if frame.ndim != 2 or frame.shape[0] != sys.n:
            raise ShapeError(f"frame must be {sys.n} x k, got {frame.shape}")
        k = frame.shape[1]
        if np.linalg.matrix_rank(frame) < k:
            raise InvalidRankError("initial frame must have full column rank")
        if q is None:
            q = ScalingQ.identity(sys.n)
        if not 1 <= k <= sys.n:
            raise ShapeError(f"frame width {k} outside [1, {sys.n}]")
        rows_idx = index_arrays(sys.n, k)
        qk = q.q_compound(k)
        frame0 = np.broadcast_to(frame, (batch, sys.n, k)).copy()
    else:
        rows_idx = np.zeros((1, 0), dtype=np.intp)
        qk = np.eye(1)
        frame0 = np.zeros((batch, sys.n, 0))

    times, states, frames, vols, diverge, collapse = _run(
        sys, x0s, frame0, qk, rows_idx, t_end, dt, record_every, tol
    )
    result = []
    for b in range(batch):
        diverged = diverge[b] >= 0
        result.append(
            Trajectory(
                times=times,
                states=states[:, b, :],
                frames=frames[:, b, :, :] if x0_frame is not None else None,
                volumes=vols[:, b] if x0_frame is not None else None,
                diverged=bool(diverged),
                escape_time=float(diverge[b] * dt) if diverged else None,
                collapse_time=float(times[collapse[b]]) if collapse[b] >= 0 else None,
            )
        )
    return result


def estimate_decay_rate(traj: Trajectory, skip_fraction: float = 0.2) -> float:
    """Least-squares slope of log volume over the post-transient window.

    The window drops the leading ``skip_fraction`` of samples and anything
    from the first underflowed volume onward; fewer than 10 remaining points
    is an error.
    """
    if traj.volumes is None:
        raise InsufficientDataError("trajectory has no volume series")
    if not 0.0 <= skip_fraction < 1.0:
        raise InvalidParameterError(f"skip_fraction must be in [0, 1), got {skip_fraction}")
    v = np.asarray(traj.volumes, dtype=float)
    t = np.asarray(traj.times, dtype=float)
    dead = np.nonzero(v < DEFAULT_TOL.volume_floor)[0]
    if dead.size:
        v = v[: dead[0]]
        t = t[: dead[0]]
    start = int(len(v) * skip_fraction)
    v = v[start:]
    t = t[start:]
    if len(v) < 10:
        raise InsufficientDataError(
            f"only {len(v)} usable samples after transient skip; need at least 10"
        )
    return float(np.polyfit(t, np.log(v), 1)[0])


def hopfield_symmetric_equilibria(net: NetworkSystem) -> EquilibriumSet:
    """Equilibria of a uniformly coupled tanh network on the symmetric ray.

    Requires W = c 11^T and a plain tanh activation; then equilibria on the
    span of the all-ones vector solve alpha * s = n c g * tanh(s). Bisection
    to 1e-12 yields {0, +s 1, -s 1} when the nonzero root exists (supercritical
    coupling n c g > alpha), else only the origin.
    """
    if not isinstance(net, NetworkSystem):
        raise WrongStructureError("expected a network system")
    f = net.f
    if f.family != "scaled_tanh" or f.premul is not None:
        raise WrongStructureError("activation must be a plain scaled tanh")
    w = net.w
    c = float(w[0, 0])
    if not np.all(np.abs(w - c) <= 1e-12 * max(1.0, abs(c))):
        raise WrongStructureError("coupling matrix must be uniform (c times all-ones)")

    n = net.n
    beta = n * c * f.gain
    points = [np.zeros(n)]
    if beta > net.alpha:
        # g(s) = beta*tanh(s) - alpha*s: positive near 0, negative past beta/alpha
        lo, hi = 1e-8, beta / net.alpha + 1.0
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if beta * math.tanh(mid) - net.alpha * mid > 0.0:
                lo = mid
            else:
                hi = mid
        s = 0.5 * (lo + hi)
        points.append(s * np.ones(n))
        points.append(-s * np.ones(n))

    residual_tol = 1e-10
    pts = np.array(points)
    for p in pts:
        res = float(np.linalg.norm(evaluate_field(net, 0.0, p)))
        if res > residual_tol:
            raise KContractError(f"equilibrium residual {res:g} exceeds {residual_tol:g}")
    return EquilibriumSet(points=pts, residual_tol=residual_tol)


def classify_convergence(traj: Trajectory, eq: EquilibriumSet, tol: float):
    """Index of the equilibrium within tol of the final state, else None."""
    if traj.diverged:
        return None
    final = traj.states[-1]
    dists = np.linalg.norm(eq.points - final[None, :], axis=1)
    best = int(np.argmin(dists))
    return best if dists[best] <= tol else None
