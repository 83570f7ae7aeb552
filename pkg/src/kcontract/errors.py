"""Exception hierarchy shared by the library and the CLI exit-code contract."""


class KContractError(Exception):
    """Base class for all library errors. CLI exit code 5 unless overridden."""

    exit_code = 5


class ParseError(KContractError):
    """Malformed input file, JSON schema violation, or inconsistent config."""

    exit_code = 2


class CapacityError(KContractError):
    """C(n,k) exceeds the configured compound-size cap."""

    exit_code = 3


class UnboundedNonlinearityError(KContractError):
    """Certification requested for a nonlinearity with no certified Jacobian bound."""

    exit_code = 4


class ShapeError(KContractError, ValueError):
    """Dimension mismatch or out-of-range compound order."""


class InvalidTupleError(KContractError, ValueError):
    """Index tuple is not strictly increasing within [1, n]."""


class InvalidRankError(KContractError, ValueError):
    """Lexicographic rank outside [0, C(n,k)-1]."""


class InvalidParameterError(KContractError, ValueError):
    """Scalar parameter outside its admissible range."""


class WrongStructureError(KContractError, ValueError):
    """System lacks the structure a specialized check requires (e.g. C != I)."""


class NotPositiveDefiniteError(KContractError):
    """Matrix expected symmetric positive definite is not."""


class NotSymmetricError(KContractError):
    """Matrix asymmetry exceeds the symmetrization tolerance."""


class SingularScalingError(KContractError):
    """Scaling matrix is numerically singular (condition number over cap)."""


class NoFeasibleGammaError(KContractError):
    """The network gain condition leaves no feasible loop-splitting interval."""


class DivergenceError(KContractError):
    """Trajectory norm exceeded the divergence guard."""

    def __init__(self, message: str, escape_time: float):
        super().__init__(f"{message} (escape at t={escape_time:.6g})")
        self.escape_time = escape_time


class InsufficientDataError(KContractError):
    """Too few samples left to fit a decay rate."""
