"""
Error taxonomy shared by the transforms, copulas and fitting apps
"""


class WTransformError(ValueError):
    pass


class DomainError(WTransformError):
    """Argument outside [0, 1] or outside the domain of T."""


class RangeError(WTransformError):
    """Piece inverse requested outside the closure of the piece's range."""


class ConstructionError(WTransformError):
    pass


class PreconditionError(WTransformError):
    pass


class NonDifferentiablePointError(WTransformError):
    """
    Raised for v in the exception set of the stochastic inverse.
    Carries what was computed so diagnostics can report it.
    """

    def __init__(self, message, v=None, pieces=None, preimages=None, weights=None, nearest_valid=None):
        super().__init__(message)
        self.v = v
        self.pieces = pieces if pieces is not None else []
        self.preimages = preimages if preimages is not None else []
        self.weights = weights if weights is not None else []
        self.nearest_valid = nearest_valid if nearest_valid is not None else []


class FitError(RuntimeError):
    def __init__(self, message, traces=None):
        super().__init__(message)
        self.traces = traces if traces is not None else []
