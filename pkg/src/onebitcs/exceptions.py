"""Exception hierarchy shared by every module of the package."""


class InvalidArgumentError(ValueError):
    """Raised when an input violates a documented precondition."""


class TooLargeError(InvalidArgumentError):
    """Raised when a brute-force enumeration exceeds its combinatorial guard."""


class SolverFailure(RuntimeError):
    """The simplex engine could not produce a trustworthy answer
    (singular basis after refactorization, or iteration cap reached)."""


class InfeasibleMeasurementsError(RuntimeError):
    """No signal is consistent with the observed bits and thresholds."""


class InfeasibleAtSparsityError(InfeasibleMeasurementsError):
    """The l0 oracle found no consistent signal with at most ``Kmax`` nonzeros."""

