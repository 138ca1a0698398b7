"""Exception hierarchy shared by every stage of the pipeline."""


class RangeBoundError(Exception):
    """Base class for all library errors."""


class InvalidBatch(RangeBoundError, ValueError):
    def __init__(self, index, invariant):
        self.index = index
        self.invariant = invariant
        super().__init__(f"measurement {index}: {invariant}")


class ArgumentError(RangeBoundError, ValueError):
    pass


class SolverFailure(RangeBoundError):
    """The cone solver stopped without a usable answer."""

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class EmptyLocalizationSet(RangeBoundError):
    """The localization set is empty: the bounds are mutually inconsistent."""


class InfeasibleProbe(RangeBoundError):
    pass


class VertexBudgetExceeded(RangeBoundError):
    pass


class DegenerateCenter(RangeBoundError):
    pass


class SamplingBudgetExceeded(RangeBoundError):
    pass


class DimensionUnsupported(RangeBoundError):
    pass
