class MertonError(Exception):
    """Base class for all errors raised by the allocation library."""

    exit_code: int = 1
    status_code: int = 500


class ValidationFailure(MertonError, ValueError):
    """Inputs violate a documented precondition."""

    exit_code = 2
    status_code = 422


class DomainError(ValidationFailure):
    """Argument outside the mathematical domain (e.g. nonpositive wealth)."""


class InadmissiblePolicyError(ValidationFailure):
    """A stock weight of 1 or more would make post-default wealth nonpositive."""


class SolverError(MertonError, RuntimeError):
    """A numerical procedure could not produce a trustworthy result."""

    exit_code = 3
    status_code = 500


class RootNotFoundError(SolverError):
    """Bracketing failed or the root finder did not converge."""


class IllPosedProblemError(SolverError):
    """The HJB minimization has no solution (second derivative A <= 0)."""


class IntegrationError(SolverError):
    """The weight ODE hit the pole of kappa or left its invariant region."""


class DataIngestionError(MertonError, OSError):
    """A price dataset is missing or cannot be parsed."""

    exit_code = 4
    status_code = 400
