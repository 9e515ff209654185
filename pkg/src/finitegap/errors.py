class BandSetError(ValueError):
    """Invalid list of intervals; ``index`` points at the offending pair."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class QuadratureError(RuntimeError):
    pass


class NotABandEdgeError(ValueError):
    pass


class ParameterRangeError(ValueError):
    pass


class HypothesisError(ValueError):
    """A numerical precondition of an asymptotic theorem is not met."""


class SingularStepError(ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
