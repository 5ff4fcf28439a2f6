"""
Exception hierarchy.

- InvalidInputError : precondition violations (CLI exit 1, HTTP 400)
- NumericalError    : solver / repair / overflow failures (CLI exit 2, HTTP 500)
"""


class CokernError(Exception):
    exit_code = 1


class InvalidInputError(CokernError, ValueError):
    exit_code = 1


class DegenerateModelError(InvalidInputError):
    """Model has no support vectors (e.g. single-class training data)."""


class NumericalError(CokernError, ArithmeticError):
    exit_code = 2


class AlignmentError(NumericalError):
    """Raised from the SPSA loop; carries the trace recorded so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class QpConvergenceError(NumericalError):
    """SMO stopped at the iteration cap with the KKT gap still open."""

    def __init__(self, max_iter: int, gap: float):
        super().__init__(f"SVM dual did not converge in {max_iter} iterations (gap {gap:.3e})")
        self.max_iter = max_iter
        self.gap = gap
