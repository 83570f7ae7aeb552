"""Matrix compounds, matrix measures, and k-contraction certificates.

The package computes multiplicative and additive matrix compounds, evaluates
scaled L2 matrix measures on them, certifies k-contraction of Lurie feedback
loops and Hopfield-style networks from sufficient spectral conditions, and
validates certificates empirically by integrating trajectories together with
k-dimensional parallelotope volumes.
"""

__version__ = "0.1.0"

from ._backend import BACKEND_NAME, available_backends
from .certify import (
    Certificate,
    ScalarSearchResult,
    check_ari_k1,
    check_network_k_contraction,
    check_scalar_remark,
    check_theorem1,
    find_scalar_gamma_p,
    lemma1_gap,
    max_feasible_eta1,
    sampled_mu_bound,
)
from .compound import (
    CompoundMatrix,
    additive_compound,
    finite_diff_additive,
    multiplicative_compound,
    volume_parallelotope,
)
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    CapacityError,
    DivergenceError,
    InsufficientDataError,
    InvalidParameterError,
    InvalidRankError,
    InvalidTupleError,
    KContractError,
    NoFeasibleGammaError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ParseError,
    ShapeError,
    SingularScalingError,
    UnboundedNonlinearityError,
    WrongStructureError,
)
from .indexsets import LexIndex, binomial, enumerate_qkn, rank, unrank
from .measures import (
    ScalingQ,
    mu2,
    mu2_scaled,
    symmetric_sqrt,
    top_k_eig_sum,
    top_k_singular_sq_sum,
)
from .simulate import (
    EquilibriumSet,
    Trajectory,
    classify_convergence,
    estimate_decay_rate,
    hopfield_symmetric_equilibria,
    integrate,
    integrate_ensemble,
    integrate_with_variational,
)
from .systems import (
    LurieSystem,
    NetworkSystem,
    Nonlinearity,
    evaluate_field,
    jacobian_closed_loop,
    jacobian_gain_bounds,
    network_jacobian,
    network_to_lurie,
    system_jacobian,
)

__all__ = [
    "__version__",
    "BACKEND_NAME",
    "available_backends",
    "Certificate",
    "ScalarSearchResult",
    "check_ari_k1",
    "check_network_k_contraction",
    "check_scalar_remark",
    "check_theorem1",
    "find_scalar_gamma_p",
    "lemma1_gap",
    "max_feasible_eta1",
    "sampled_mu_bound",
    "CompoundMatrix",
    "additive_compound",
    "finite_diff_additive",
    "multiplicative_compound",
    "volume_parallelotope",
    "DEFAULT_TOL",
    "Tolerances",
    "CapacityError",
    "DivergenceError",
    "InsufficientDataError",
    "InvalidParameterError",
    "InvalidRankError",
    "InvalidTupleError",
    "KContractError",
    "NoFeasibleGammaError",
    "NotPositiveDefiniteError",
    "NotSymmetricError",
    "ParseError",
    "ShapeError",
    "SingularScalingError",
    "UnboundedNonlinearityError",
    "WrongStructureError",
    "LexIndex",
    "binomial",
    "enumerate_qkn",
    "rank",
    "unrank",
    "ScalingQ",
    "mu2",
    "mu2_scaled",
    "symmetric_sqrt",
    "top_k_eig_sum",
    "top_k_singular_sq_sum",
    "EquilibriumSet",
    "Trajectory",
    "classify_convergence",
    "estimate_decay_rate",
    "hopfield_symmetric_equilibria",
    "integrate",
    "integrate_ensemble",
    "integrate_with_variational",
    "LurieSystem",
    "NetworkSystem",
    "Nonlinearity",
    "evaluate_field",
    "jacobian_closed_loop",
    "jacobian_gain_bounds",
    "network_jacobian",
    "network_to_lurie",
    "system_jacobian",
]
