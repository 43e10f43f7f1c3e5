"""Exception hierarchy.

Every error carries a short ``kind`` string so that the command line driver
can emit structured ``{"error_kind": ..., "context": ...}`` records.
"""


class HuaError(Exception):
    kind = "hua_error"
    # exit status used by the CLI when the error escapes a subcommand
    exit_code = 3

    def __init__(self, message="", **context):
        super().__init__(message)
        self.context = context

    def record(self):
        return {"error_kind": self.kind, "message": str(self), "context": self.context}


class PrecisionExhausted(HuaError, ArithmeticError):
    """Cancellation consumed every tracked digit; the valuation is unknown."""

    kind = "precision_exhausted"


class PrecisionEscalation(PrecisionExhausted):
    """Raised by samplers when a draw must be repeated at higher precision."""

    kind = "precision_escalation"


class DivisionByZero(HuaError, ZeroDivisionError):
    kind = "division_by_zero"


class ShapeMismatch(HuaError, ValueError):
    kind = "shape_mismatch"
    exit_code = 2


class SingularMatrix(HuaError, ArithmeticError):
    kind = "singular_matrix"


class ConvergenceDomain(HuaError, ValueError):
    """Parameters outside the region where the integral or series converges."""

    kind = "convergence_domain"


class BasePointSingular(HuaError, ArithmeticError):
    """``a + z c`` is singular: ``z`` lies off the affine chart of ``g``."""

    kind = "base_point_singular"


class LevelTooSmall(HuaError, ValueError):
    kind = "level_too_small"
    exit_code = 2
