"""Shared exception types."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class BranchDomainError(DomainError):
    """Radicand of the algebraic y1' branch went negative.

    Signals unphysical shooting parameters; solvers convert this to a
    penalty residual instead of crashing.
    """

    def __init__(self, x, depth):
        self.x = float(x)
        self.depth = float(depth)
        super().__init__(
            f"y1' branch radicand negative at x={self.x:.6g} (depth {self.depth:.3g})"
        )


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed during integration."""


class ConvergenceFailure(RuntimeError):
    """Newton iteration did not converge; carries the best iterate seen."""

    def __init__(self, message, best_params=None, best_residual=None):
        super().__init__(message)
        self.best_params = best_params
        self.best_residual = best_residual
