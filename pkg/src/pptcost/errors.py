"""Exception hierarchy shared across the package."""


class PPTCostError(Exception):
    """Base class for all errors raised by pptcost."""


class DimensionError(PPTCostError, ValueError):
    """Operand shapes are incompatible."""


class NotHermitianError(PPTCostError, ValueError):
    """A matrix deviates from Hermiticity by more than the tolerance."""


class NumericalError(PPTCostError, ArithmeticError):
    """A numerical kernel failed to converge."""


class ValidationError(PPTCostError, ValueError):
    """An object violates a physical or structural invariant."""


class DimensionCapError(PPTCostError, ValueError):
    """A construction would exceed the configured maximum dimension."""


class SolverError(PPTCostError, RuntimeError):
    """The SDP solver did not produce a usable certificate.

    The partially converged solution, if any, is kept on ``solution``.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
