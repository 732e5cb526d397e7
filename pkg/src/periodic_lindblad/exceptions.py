"""Exception hierarchy.

Every error carries a stable ``code`` string; the command line tool reports it
verbatim in its structured error output.
"""


class PeriodicLindbladError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class DimensionMismatch(PeriodicLindbladError, ValueError):
    code = "dimension_mismatch"


class NonHermitianInput(PeriodicLindbladError, ValueError):
    code = "non_hermitian_input"


class BranchFailure(PeriodicLindbladError, ArithmeticError):
    """An eigenvalue sits on (or too close to) the branch cut of the principal log."""

    code = "branch_failure"


class UnknownFrequency(PeriodicLindbladError, KeyError):
    code = "unknown_frequency"


class QuadratureNonConvergence(PeriodicLindbladError, ArithmeticError):
    code = "quadrature_non_convergence"


class TailDivergence(PeriodicLindbladError, ArithmeticError):
    code = "tail_divergence"


class TruncationInsufficient(PeriodicLindbladError, ValueError):
    code = "truncation_insufficient"


class CongruenceViolation(PeriodicLindbladError, ValueError):
    """Two Bohr frequencies differ by a nonzero multiple of the drive frequency."""

    code = "congruence_violation"

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class IntegratorStepFailure(PeriodicLindbladError, RuntimeError):
    code = "integrator_step_failure"


class NotCommutative(PeriodicLindbladError, ValueError):
    code = "not_commutative"


class IllConditionedEigenbasis(PeriodicLindbladError, ArithmeticError):
    code = "ill_conditioned_eigenbasis"


class DimensionTooLarge(PeriodicLindbladError, ValueError):
    code = "dimension_too_large"


class ParseError(PeriodicLindbladError, ValueError):
    code = "parse_error"


class ValidationError(PeriodicLindbladError, ValueError):
    """Configuration failed validation; ``errors`` lists ``(field_path, message)`` pairs."""

    code = "validation_error"

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{path}: {msg}" for path, msg in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
