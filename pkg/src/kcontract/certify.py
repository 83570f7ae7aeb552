"""Sufficient-condition checks for k-contraction of Lurie and networked systems.

The main check combines a Riccati-type inequality on k-th additive compounds
of the linear part with a gain condition on the feedback Jacobian. A passing
certificate guarantees the scaled measure of the closed-loop Jacobian's k-th
additive compound stays at or below -(eta1 + eta2)/2 everywhere, i.e.
k-contraction at that rate in the norm |Q^(k) z|_2.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .compound import additive_compound, as_matrix, multiplicative_compound
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    InvalidParameterError,
    KContractError,
    NoFeasibleGammaError,
    ShapeError,
    UnboundedNonlinearityError,
    WrongStructureError,
)
from .measures import ScalingQ, mu2, symmetric_sqrt, top_k_eig_sum, top_k_singular_sq_sum
from .systems import LurieSystem, NetworkSystem, network_to_lurie, system_jacobian

__all__ = [
    "Certificate",
    "ScalarSearchResult",
    "check_theorem1",
    "check_ari_k1",
    "check_scalar_remark",
    "check_network_k_contraction",
    "find_scalar_gamma_p",
    "lemma1_gap",
    "sampled_mu_bound",
    "max_feasible_eta1",
]


@dataclass
class Certificate:
    """Outcome of a sufficient-condition check.

    Margins are tolerance-adjusted slacks: every margin is >= 0 on a passing
    certificate, and a failing check reports how far it missed. ``details``
    carries raw diagnostic numbers (condition values, thresholds, the scalar
    search point), ``assumptions`` the certified bounds that were trusted.
    """

    passed: bool
    k: int
    eta1: float
    eta2: float
    rate_bound: float
    scaling: ScalingQ | None
    margins: dict = dc_field(default_factory=dict)
    assumptions: list = dc_field(default_factory=list)
    rigorous: bool = True
    tolerances: dict = dc_field(default_factory=lambda: DEFAULT_TOL.as_dict())
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "k": int(self.k),
            "eta1": float(self.eta1),
            "eta2": float(self.eta2),
            "rate_bound": float(self.rate_bound),
            "scaling_q": None if self.scaling is None else self.scaling.q.tolist(),
            "scaling_p": None if self.scaling is None else self.scaling.p.tolist(),
            "margins": {k: float(v) for k, v in self.margins.items()},
            "assumptions": list(self.assumptions),
            "rigorous": bool(self.rigorous),
            "tolerances": dict(self.tolerances),
            "details": {k: float(v) for k, v in self.details.items()},
        }


@dataclass(frozen=True)
class ScalarSearchResult:
    """Scalar loop split (gamma) and scalar metric (p) realizing a certificate."""

    gamma: float
    p: float
    eta1: float
    eta2: float
    feasible: bool


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _lam_max(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_sym(m))[-1])


def riccati_compound_matrix(
    sys: LurieSystem, k: int, scaling: ScalingQ, eta1: float
) -> np.ndarray:
    """Left-hand side of the compound Riccati inequality for the given eta1.

    Builds P^(k) A^[k] + (A^[k])^T P^(k) + eta1 P^(k)
    + Q^(k) [ (Q B B^T Q)^[k] + (Q^-1 C^T C Q^-1)^[k] ] Q^(k),
    which must be negative semidefinite for the certificate's first condition.
    """
    pk = multiplicative_compound(scaling.p, k).body
    qk = scaling.q_compound(k)
    ak = additive_compound(sys.a, k).body
    qb = scaling.q @ sys.b
    cqi = sys.c @ scaling.q_inv()
    inner = additive_compound(qb @ qb.T, k).body + additive_compound(cqi.T @ cqi, k).body
    return pk @ ak + ak.T @ pk + eta1 * pk + qk @ inner @ qk


def max_feasible_eta1(sys: LurieSystem, k: int, scaling: ScalingQ) -> float:
    """Largest eta1 for which the compound Riccati inequality still holds.

    The inequality is monotone in eta1, so the supremum is the negated largest
    generalized eigenvalue of the eta1-free part against P^(k).
    """
    m0 = _sym(riccati_compound_matrix(sys, k, scaling, eta1=0.0))
    pk = multiplicative_compound(scaling.p, k).body
    chol = np.linalg.cholesky(_sym(pk))
    reduced = np.linalg.solve(chol, np.linalg.solve(chol, m0).T).T
    return -_lam_max(reduced)


def gain_condition_bound(
    phi, c: np.ndarray, scaling: ScalingQ, k: int
) -> tuple[float, list, bool]:
    """Certified upper bound on the supremum over (t, y) of the top-k
    eigenvalue sum of Q^-1 C^T (J_phi^T J_phi - I) C Q^-1.

    Exact for constant Jacobians and for the plain tanh family (whose Jacobian
    envelope is attained at the origin); otherwise a subadditive split bounded
    through the certified singular-value bounds. Returns (bound, assumptions,
    exact_flag).
    """
    d = c @ scaling.q_inv()
    n = d.shape[1]
    jconst = phi.constant_jacobian()
    if jconst is not None:
        g = d.T @ (jconst.T @ jconst - np.eye(phi.dim)) @ d
        return top_k_eig_sum(g, k), ["gain condition evaluated exactly (constant Jacobian)"], True
    if phi.family == "scaled_tanh" and phi.premul is None:
        g = (phi.gain**2 - 1.0) * (d.T @ d)
        note = (
            f"gain condition evaluated at the tanh envelope |J| <= {abs(phi.gain):.6g}, "
            "attained at the origin"
        )
        return top_k_eig_sum(g, k), [note], True
    # generic certified split: top-k sums are subadditive
    sv_d = np.linalg.svd(d, compute_uv=False)
    eig_dtd = np.zeros(n)
    eig_dtd[: sv_d.size] = sv_d**2  # eigenvalues of D^T D, descending
    term2 = -float(np.sort(eig_dtd)[:k].sum())
    candidates = []
    assumptions = []
    norm_bound = phi.jac_norm_bound()
    if norm_bound is not None:
        candidates.append(norm_bound**2 * float(eig_dtd[:k].sum()))
        assumptions.append(f"||J_phi||_2 <= {norm_bound:.6g}")
    try:
        topk, note = phi.gain_bound_info(k)
    except UnboundedNonlinearityError:
        topk = None
    if topk is not None:
        candidates.append(float(np.max(eig_dtd)) * topk)
        assumptions.append(f"top-{k} singular bound {topk:.6g} ({note})")
    if not candidates:
        raise UnboundedNonlinearityError(
            "no certified Jacobian bound available for the gain condition; "
            "declare jac_norm_bound or jac_topk_sq_bound"
        )
    return min(candidates) + term2, assumptions, False


def sampled_gain_bound(phi, c, scaling: ScalingQ, k: int, samples) -> float:
    """Empirical (non-rigorous) gain-condition bound from sampled inputs."""
    d = c @ scaling.q_inv()
    worst = -np.inf
    eye = np.eye(phi.dim)
    for t, y in samples:
        j = phi.jacobian(t, np.asarray(y, dtype=float))
        g = d.T @ (j.T @ j - eye) @ d
        worst = max(worst, top_k_eig_sum(g, k))
    return worst


def check_theorem1(
    sys: LurieSystem,
    k: int,
    p,
    eta1: float,
    eta2: float,
    tol: Tolerances = DEFAULT_TOL,
    gain_samples=None,
) -> Certificate:
    """Check the two sufficient conditions for k-contraction at rate
    (eta1 + eta2)/2 in the scaled norm |Q^(k) z|_2 with Q = sqrt(P).

    Condition one: the compound Riccati matrix is negative semidefinite
    (within the PSD tolerance). Condition two: the certified supremum of the
    gain-condition eigenvalue sum is at most -eta2. When ``gain_samples`` is
    given, the supremum is instead estimated empirically and the certificate
    is marked non-rigorous.
    """
    if not 1 <= int(k) <= sys.n:
        raise ShapeError(f"k={k} outside [1, {sys.n}]")
    p = as_matrix(p, square=True, name="P")
    scaling = symmetric_sqrt(p, tol)

    m = riccati_compound_matrix(sys, k, scaling, eta1)
    lam = _lam_max(m)
    riccati_slack = tol.psd_rel * (1.0 + np.linalg.norm(m, 2)) - lam

    rigorous = True
    if gain_samples is None:
        bound, assumptions, _ = gain_condition_bound(sys.phi, sys.c, scaling, k)
    else:
        bound = sampled_gain_bound(sys.phi, sys.c, scaling, k, gain_samples)
        assumptions = [f"gain condition sampled at {len(gain_samples)} points only"]
        rigorous = False
    gain_gap = -eta2 - bound + tol.gain_rel * (1.0 + abs(bound))

    passed = riccati_slack >= 0.0 and gain_gap >= 0.0 and (eta1 + eta2) > 0.0
    return Certificate(
        passed=passed,
        k=k,
        eta1=eta1,
        eta2=eta2,
        rate_bound=0.5 * (eta1 + eta2),
        scaling=scaling,
        margins={"riccati_slack": riccati_slack, "gain_gap": gain_gap},
        assumptions=assumptions,
        rigorous=rigorous,
        tolerances=tol.as_dict(),
        details={"riccati_lambda_max": lam, "gain_bound": bound},
    )


def check_ari_k1(sys: LurieSystem, p, tol: Tolerances = DEFAULT_TOL):
    """Strict algebraic Riccati inequality P A + A^T P + P B B^T P + C^T C < 0.

    Returns (holds, margin) with margin = -lambda_max of the symmetrized
    left-hand side; strictness requires the margin to clear the tolerance.
    """
    p = as_matrix(p, square=True, name="P")
    symmetric_sqrt(p, tol)  # SPD validation
    m = p @ sys.a + sys.a.T @ p + p @ sys.b @ sys.b.T @ p + sys.c.T @ sys.c
    lam = _lam_max(m)
    margin = -lam
    holds = lam <= -tol.strict_rel * (1.0 + np.linalg.norm(m, 2))
    return holds, margin


def check_scalar_remark(
    sys: LurieSystem, k: int, p: float, eta1: float, tol: Tolerances = DEFAULT_TOL
) -> Certificate:
    """Scalar-metric certificate for identity-output loops (C = I, P = p I).

    Passes iff the certified top-k squared-singular-value bound on the
    feedback Jacobian is strictly below k + eta1 * p and the compound Riccati
    inequality holds for P = p I; the implied eta2 is (k - bound)/p.
    """
    n = sys.n
    if sys.c.shape != (n, n) or not np.array_equal(sys.c, np.eye(n)):
        raise WrongStructureError("the scalar-metric check requires C = I")
    if not p > 0:
        raise InvalidParameterError(f"p must be positive, got {p}")
    bound, note = sys.phi.gain_bound_info(k)
    scalar_gap = k + eta1 * p - bound

    scaling = ScalingQ(q=np.sqrt(p) * np.eye(n), p=p * np.eye(n))
    m = riccati_compound_matrix(sys, k, scaling, eta1)
    lam = _lam_max(m)
    riccati_slack = tol.psd_rel * (1.0 + np.linalg.norm(m, 2)) - lam

    eta2 = (k - bound) / p
    passed = scalar_gap > 0.0 and riccati_slack >= 0.0
    return Certificate(
        passed=passed,
        k=k,
        eta1=eta1,
        eta2=eta2,
        rate_bound=0.5 * (eta1 + eta2),
        scaling=scaling,
        margins={"scalar_gain_gap": scalar_gap, "riccati_slack": riccati_slack},
        assumptions=[f"top-{k} singular bound {bound:.6g} ({note})"],
        tolerances=tol.as_dict(),
        details={"gain_bound": bound, "p": p},
    )


def _network_condition(net: NetworkSystem, k: int):
    norm_bound = net.f.jac_norm_bound()
    if norm_bound is None:
        raise UnboundedNonlinearityError(
            "network certification needs a certified activation slope bound; "
            "declare jac_norm_bound on the activation"
        )
    value = norm_bound**2 * top_k_singular_sq_sum(net.w, k)
    threshold = net.alpha**2 * k
    return norm_bound, value, threshold


def find_scalar_gamma_p(
    net: NetworkSystem, k: int, tol: Tolerances = DEFAULT_TOL
) -> ScalarSearchResult:
    """Pick the loop split gamma and scalar metric p realizing the network
    certificate: gamma at the midpoint of its feasible interval and p = 1/gamma
    (the maximizer of the Riccati slack), with both conditions re-validated on
    the rewritten loop.
    """
    norm_bound, value, threshold = _network_condition(net, k)
    gamma_lo = np.sqrt(value / k)
    if not gamma_lo < net.alpha:
        raise NoFeasibleGammaError(
            f"condition value {value:.6g} >= threshold {threshold:.6g}: "
            "no feasible loop split"
        )
    gamma = 0.5 * (gamma_lo + net.alpha)
    p = 1.0 / gamma
    eta1 = 2.0 * k * (net.alpha - gamma)
    eta2 = gamma * (k - value / gamma**2)

    # defensive re-validation against the full matrix conditions
    lurie = network_to_lurie(net, gamma)
    cert = check_theorem1(lurie, k, p * np.eye(net.n), eta1, eta2, tol)
    if not cert.passed:
        raise KContractError(
            "scalar search produced parameters that fail re-validation: "
            f"margins {cert.margins}"
        )
    return ScalarSearchResult(gamma=gamma, p=p, eta1=eta1, eta2=eta2, feasible=True)


def check_network_k_contraction(
    net: NetworkSystem, k: int, tol: Tolerances = DEFAULT_TOL
) -> Certificate:
    """Network sufficient condition: the squared activation-slope bound times
    the top-k squared-singular-value sum of W must stay below alpha^2 k.

    On a pass, the scalar search supplies explicit (gamma, p, eta1, eta2) and
    the rewritten Lurie loop is cross-checked against the full conditions.
    """
    if not 1 <= int(k) <= net.n:
        raise ShapeError(f"k={k} outside [1, {net.n}]")
    norm_bound, value, threshold = _network_condition(net, k)
    network_gap = threshold - value
    assumptions = [f"||J_f||_2 <= {norm_bound:.6g} (activation slope bound)"]
    details = {"condition_value": value, "threshold": threshold}

    if not value < threshold:
        return Certificate(
            passed=False,
            k=k,
            eta1=0.0,
            eta2=0.0,
            rate_bound=0.0,
            scaling=None,
            margins={"network_gap": network_gap},
            assumptions=assumptions,
            tolerances=tol.as_dict(),
            details=details,
        )

    search = find_scalar_gamma_p(net, k, tol)
    lurie = network_to_lurie(net, search.gamma)
    cross = check_theorem1(
        lurie, k, search.p * np.eye(net.n), search.eta1, search.eta2, tol
    )
    details.update({"gamma": search.gamma, "p": search.p})
    margins = {"network_gap": network_gap, **cross.margins}
    return Certificate(
        passed=cross.passed,
        k=k,
        eta1=search.eta1,
        eta2=search.eta2,
        rate_bound=0.5 * (search.eta1 + search.eta2),
        scaling=cross.scaling,
        margins=margins,
        assumptions=assumptions + cross.assumptions,
        tolerances=tol.as_dict(),
        details=details,
    )


def lemma1_gap(m, n, k: int) -> float:
    """Smallest eigenvalue of (M M^T)^[k] - (-M N - N^T M^T - N^T N)^[k].

    Nonnegative for all conformable M, N and orders k; exercised as a property
    test of the compound machinery.
    """
    m = as_matrix(m, name="M")
    n = as_matrix(n, name="N")
    if m.shape != n.T.shape:
        raise ShapeError(f"shapes {m.shape} and {n.shape} are not conformable")
    lhs = additive_compound(-m @ n - n.T @ m.T - n.T @ n, k).body
    rhs = additive_compound(m @ m.T, k).body
    return float(np.linalg.eigvalsh(_sym(rhs - lhs))[0])


def sampled_mu_bound(sys, k: int, scaling: ScalingQ, samples) -> float:
    """Max over the samples of the scaled measure of the Jacobian's k-th
    additive compound; a diagnostic cross-check of passing certificates."""
    samples = list(samples)
    if not samples:
        raise InvalidParameterError("need at least one (t, x) sample")
    hk = scaling.q_compound(k)
    hk_inv = np.linalg.inv(hk)
    worst = -np.inf
    for t, x in samples:
        jk = additive_compound(system_jacobian(sys, t, np.asarray(x, dtype=float)), k).body
        worst = max(worst, mu2(hk @ jk @ hk_inv))
    return worst
