"""Certification conditions: compound Riccati, gain bounds, network search."""

import numpy as np
import pytest

from kcontract.certify import (
    check_ari_k1,
    check_network_k_contraction,
    check_scalar_remark,
    check_theorem1,
    find_scalar_gamma_p,
    gain_condition_bound,
    lemma1_gap,
    max_feasible_eta1,
    riccati_compound_matrix,
    sampled_gain_bound,
    sampled_mu_bound,
)
from kcontract.errors import (
    InvalidParameterError,
    NoFeasibleGammaError,
    ShapeError,
    UnboundedNonlinearityError,
    WrongStructureError,
)
from kcontract.measures import ScalingQ, symmetric_sqrt
from kcontract.systems import (
    LurieSystem,
    NetworkSystem,
    Nonlinearity,
    network_to_lurie,
)


def scalar_loop(c_gain: float, phi=None) -> LurieSystem:
    if phi is None:
        phi = Nonlinearity.scaled_tanh(1.0, 1)
    return LurieSystem(
        a=np.array([[-1.0]]),
        b=np.array([[1.0]]),
        c=np.array([[c_gain]]),
        phi=phi,
    )


def hopfield_net(n=10, alpha=0.5, w_scale=0.07) -> NetworkSystem:
    return NetworkSystem(
        alpha=alpha,
        w=w_scale * np.ones((n, n)),
        f=Nonlinearity.scaled_tanh(1.0, n),
    )


def test_ari_scalar_example():
    # P A + A^T P + P B B^T P + C^T C = -2 + 1 + 0.25 = -0.75
    holds, margin = check_ari_k1(scalar_loop(0.5), np.array([[1.0]]))
    assert holds
    assert margin == pytest.approx(0.75, abs=1e-12)
    # C = 1 closes the gap exactly: the strict inequality fails
    holds, margin = check_ari_k1(scalar_loop(1.0), np.array([[1.0]]))
    assert not holds
    assert margin == pytest.approx(0.0, abs=1e-12)


def test_ari_validates_p():
    from kcontract.errors import NotPositiveDefiniteError

    with pytest.raises(NotPositiveDefiniteError):
        check_ari_k1(scalar_loop(0.5), np.array([[-1.0]]))


def test_theorem_conditions_scalar_loop():
    # |J_phi| <= 0.9: gain term (J^2 - 1) C^2 stays <= -0.19 * 0.25
    phi = Nonlinearity.scaled_tanh(0.9, 1)
    sys = scalar_loop(0.5, phi)
    cert = check_theorem1(sys, 1, np.array([[1.0]]), eta1=0.5, eta2=0.04)
    assert cert.passed
    assert cert.rate_bound == pytest.approx(0.27)
    assert cert.rigorous
    assert cert.margins["riccati_slack"] >= 0
    assert cert.margins["gain_gap"] >= 0

    # eta1 past the Riccati budget of 0.75 must fail the first condition
    cert = check_theorem1(sys, 1, np.array([[1.0]]), eta1=0.8, eta2=0.04)
    assert not cert.passed
    assert cert.margins["riccati_slack"] < 0

    # eta2 past the certified gain gap must fail the second condition
    cert = check_theorem1(sys, 1, np.array([[1.0]]), eta1=0.5, eta2=0.05)
    assert not cert.passed
    assert cert.margins["gain_gap"] < 0


def test_theorem_rejects_zero_rate_and_bad_k():
    sys = scalar_loop(0.5)
    cert = check_theorem1(sys, 1, np.array([[1.0]]), eta1=0.0, eta2=0.0)
    assert not cert.passed  # needs eta1 + eta2 > 0
    with pytest.raises(ShapeError):
        check_theorem1(sys, 2, np.array([[1.0]]), eta1=0.1, eta2=0.0)


def test_certificate_dict_is_json_ready():
    import json

    cert = check_theorem1(scalar_loop(0.5), 1, np.array([[1.0]]), 0.5, 0.0)
    blob = json.dumps(cert.to_dict())
    back = json.loads(blob)
    assert back["passed"] is True
    assert back["k"] == 1
    assert set(back["margins"]) == {"riccati_slack", "gain_gap"}
    assert back["tolerances"]["psd_rel"] == 1e-9


def test_riccati_matrix_scalar_value():
    sys = scalar_loop(0.5)
    scaling = symmetric_sqrt(np.array([[1.0]]))
    m = riccati_compound_matrix(sys, 1, scaling, eta1=0.0)
    assert m.shape == (1, 1)
    assert m[0, 0] == pytest.approx(-0.75)
    assert max_feasible_eta1(sys, 1, scaling) == pytest.approx(0.75)


def test_max_feasible_eta1_is_the_boundary():
    rng = np.random.default_rng(30)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        a = rng.standard_normal((n, n)) - 3.0 * np.eye(n)
        sys = LurieSystem(
            a=a,
            b=0.1 * rng.standard_normal((n, 1)),
            c=0.1 * rng.standard_normal((1, n)),
            phi=Nonlinearity.scaled_tanh(1.0, 1),
        )
        scaling = ScalingQ.identity(n)
        k = int(rng.integers(1, n + 1))
        star = max_feasible_eta1(sys, k, scaling)
        lam_at = np.linalg.eigvalsh(
            0.5 * (riccati_compound_matrix(sys, k, scaling, star)
                   + riccati_compound_matrix(sys, k, scaling, star).T)
        )[-1]
        assert abs(lam_at) < 1e-8  # boundary of feasibility
        lam_past = np.linalg.eigvalsh(
            0.5 * (riccati_compound_matrix(sys, k, scaling, star + 0.1)
                   + riccati_compound_matrix(sys, k, scaling, star + 0.1).T)
        )[-1]
        assert lam_past > 0


def test_gain_bound_constant_jacobian_exact():
    phi = Nonlinearity.linear(np.array([[0.5]]))
    c = np.array([[2.0]])
    bound, notes, exact = gain_condition_bound(phi, c, ScalingQ.identity(1), 1)
    assert exact
    # (0.25 - 1) * 4
    assert bound == pytest.approx(-3.0)
    assert any("constant" in n for n in notes)


def test_gain_bound_tanh_envelope_exact():
    # plain tanh: envelope attained at the origin, bound = top-k of (g^2-1) D^T D
    phi = Nonlinearity.scaled_tanh(0.8, 3)
    c = np.eye(3)
    bound, _, exact = gain_condition_bound(phi, c, ScalingQ.identity(3), 2)
    assert exact
    assert bound == pytest.approx(2 * (0.64 - 1.0))
    # the sampled diagnostic can never exceed an exact bound
    rng = np.random.default_rng(31)
    samples = [(0.0, rng.uniform(-3, 3, size=3)) for _ in range(100)]
    sampled = sampled_gain_bound(phi, c, ScalingQ.identity(3), 2, samples)
    assert sampled <= bound + 1e-12


def test_gain_bound_generic_dominates_samples():
    rng = np.random.default_rng(32)
    for _ in range(5):
        m = rng.standard_normal((3, 3))
        phi = Nonlinearity.scaled_tanh(1.1, 3).with_premul(m)
        c = rng.standard_normal((3, 4))
        q = ScalingQ.from_q(np.diag(rng.uniform(0.5, 2.0, size=4)))
        bound, notes, exact = gain_condition_bound(phi, c, q, 2)
        assert not exact
        assert notes
        samples = [(0.0, rng.uniform(-3, 3, size=3)) for _ in range(200)]
        sampled = sampled_gain_bound(phi, c, q, 2, samples)
        assert sampled <= bound + 1e-10


def test_gain_bound_needs_certified_slope():
    pw = Nonlinearity.piecewise_table([-1.0, 1.0], [-1.0, 1.0], dim=2)
    with pytest.raises(UnboundedNonlinearityError):
        gain_condition_bound(pw, np.eye(2), ScalingQ.identity(2), 1)
    declared = Nonlinearity.piecewise_table(
        [-1.0, 1.0], [-1.0, 1.0], dim=2, declared_norm_bound=1.0
    )
    bound, _, exact = gain_condition_bound(declared, np.eye(2), ScalingQ.identity(2), 1)
    assert not exact
    assert bound <= 0.0 + 1e-12


def test_sampled_theorem_check_is_flagged():
    sys = scalar_loop(0.5, Nonlinearity.scaled_tanh(0.9, 1))
    samples = [(0.0, np.array([y])) for y in np.linspace(-2, 2, 41)]
    cert = check_theorem1(
        sys, 1, np.array([[1.0]]), 0.5, 0.04, gain_samples=samples
    )
    assert not cert.rigorous
    assert cert.passed  # sampled sup of (J^2-1)/4 peaks at -0.0475 (origin)


def test_scalar_remark_requires_identity_output():
    with pytest.raises(WrongStructureError):
        check_scalar_remark(scalar_loop(0.5), 1, p=1.0, eta1=0.1)
    with pytest.raises(InvalidParameterError):
        check_scalar_remark(scalar_loop(1.0), 1, p=0.0, eta1=0.1)


def test_scalar_remark_on_rewritten_network():
    net = hopfield_net()
    search = find_scalar_gamma_p(net, 2)
    lurie = network_to_lurie(net, search.gamma)
    cert = check_scalar_remark(lurie, 2, p=search.p, eta1=search.eta1)
    assert cert.passed
    assert cert.eta2 == pytest.approx(search.eta2, rel=1e-9)
    assert cert.margins["scalar_gain_gap"] > 0
    assert cert.margins["riccati_slack"] >= 0


def test_network_certificate_reference_numbers():
    net = hopfield_net()
    cert2 = check_network_k_contraction(net, 2)
    assert cert2.passed
    assert cert2.details["condition_value"] == pytest.approx(0.49, abs=1e-12)
    assert cert2.details["threshold"] == pytest.approx(0.5, abs=1e-12)
    assert cert2.margins["network_gap"] == pytest.approx(0.01, abs=1e-12)
    assert cert2.rate_bound == pytest.approx(0.010037815981868446, rel=1e-9)

    cert1 = check_network_k_contraction(net, 1)
    assert not cert1.passed
    assert cert1.details["threshold"] == pytest.approx(0.25, abs=1e-12)
    assert cert1.margins["network_gap"] == pytest.approx(-0.24, abs=1e-12)
    assert cert1.rate_bound == 0.0
    assert cert1.scaling is None


def test_scalar_search_reference_numbers():
    net = hopfield_net()
    search = find_scalar_gamma_p(net, 2)
    assert search.feasible
    assert search.gamma == pytest.approx(0.4974873734152917, rel=1e-12)
    assert search.p == pytest.approx(2.010101267766693, rel=1e-12)
    assert search.eta1 == pytest.approx(0.010050506338833198, rel=1e-9)
    assert search.eta2 == pytest.approx(0.010025125624903696, rel=1e-9)
    # the split keeps gamma inside its feasible interval
    assert np.sqrt(0.49 / 2) < search.gamma < 0.5


def test_scalar_search_infeasible():
    with pytest.raises(NoFeasibleGammaError):
        find_scalar_gamma_p(hopfield_net(), 1)
    # heavier coupling kills k = 2 as well
    with pytest.raises(NoFeasibleGammaError):
        find_scalar_gamma_p(hopfield_net(w_scale=0.2), 2)


def test_network_needs_slope_bound():
    n = 4
    f = Nonlinearity.piecewise_table([-1.0, 1.0], [-1.0, 1.0], dim=n)
    net = NetworkSystem(alpha=1.0, w=0.01 * np.eye(n), f=f)
    with pytest.raises(UnboundedNonlinearityError):
        check_network_k_contraction(net, 1)
    # a declared slope bound unlocks the check
    f2 = Nonlinearity.piecewise_table(
        [-1.0, 1.0], [-1.0, 1.0], dim=n, declared_norm_bound=1.0
    )
    net2 = NetworkSystem(alpha=1.0, w=0.01 * np.eye(n), f=f2)
    assert check_network_k_contraction(net2, 1).passed


def test_lemma1_gap_nonnegative_random():
    rng = np.random.default_rng(33)
    for _ in range(100):
        rows = int(rng.integers(1, 6))
        cols = int(rng.integers(1, 6))
        k = int(rng.integers(1, rows + 1))
        m = rng.standard_normal((rows, cols))
        n = rng.standard_normal((cols, rows))
        assert lemma1_gap(m, n, k) >= -1e-10


def test_lemma1_gap_shape_check():
    with pytest.raises(ShapeError):
        lemma1_gap(np.ones((2, 3)), np.ones((2, 3)), 1)


def test_sampled_mu_respects_certificate():
    net = hopfield_net()
    cert = check_network_k_contraction(net, 2)
    rng = np.random.default_rng(34)
    samples = [(0.0, rng.uniform(-3, 3, size=net.n)) for _ in range(200)]
    worst = sampled_mu_bound(net, 2, cert.scaling, samples)
    assert worst <= -cert.rate_bound + 1e-8
    with pytest.raises(InvalidParameterError):
        sampled_mu_bound(net, 2, cert.scaling, [])
