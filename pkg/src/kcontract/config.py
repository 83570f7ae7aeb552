"""Library-wide numeric tolerances and capacity limits.

All tolerances are relative unless noted. They are deliberately plain module
constants bundled into a dataclass so tests and configs can override them and
certificates can echo the values actually used.
"""

import os
from dataclasses import dataclass, field, asdict

DEFAULT_COMPOUND_CAP = 1_000_000
CAP_ENV_VAR = "KCONTRACT_MAX_COMPOUND"

BACKEND_ENV_VAR = "KCONTRACT_BACKEND"


def compound_cap() -> int:
    """Largest allowed C(n,k) for a dense compound; env override wins."""
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_COMPOUND_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"{CAP_ENV_VAR} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class Tolerances:
    """Tolerance block recorded in every certificate."""

    # "<= 0" acceptance: lam_max(sym(M)) <= psd_rel * (1 + ||M||_2)
    psd_rel: float = 1e-9
    # strict "< 0": lam_max <= -strict_rel * (1 + ||M||_2)
    strict_rel: float = 1e-9
    # symmetrization guard before eigendecompositions
    sym_rel: float = 1e-9
    # gain-condition comparison slack, relative
    gain_rel: float = 1e-9
    # SPD acceptance: min eigenvalue > spd_floor * max eigenvalue
    spd_floor: float = 1e-12
    # refuse scaled measures beyond this condition number
    cond_cap: float = 1e12
    # additive compound vs finite-difference oracle agreement (absolute)
    oracle_abs: float = 1e-5
    # volume underflow floor: variational runs stop below this
    volume_floor: float = 1e-300
    # trajectory divergence guard on |x|_2
    divergence_norm: float = 1e9

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = Tolerances()
