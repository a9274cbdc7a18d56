"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each carries a short typed name.
"""


class LHKError(Exception):
    """Base class for all library errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class CatalogError(LHKError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ShapeError(LHKError, ValueError):
    pass


class SizeError(LHKError, ValueError):
    pass


class ParseError(LHKError, ValueError):
    pass


class DomainError(LHKError, ValueError):
    """A point lies outside the open domain of a phase space."""

    def __init__(self, message, point=None, coordinate=None):
        super().__init__(message)
        self.point = point
        self.coordinate = coordinate


class CurveRangeError(LHKError, ValueError):
    pass


class IntegrationError(LHKError, RuntimeError):
    """Integration stopped early; ``trajectory`` holds the accepted prefix."""

    def __init__(self, message, trajectory=None, t=None, state=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.t = t
        self.state = state


class DomainExitError(IntegrationError):
    pass


class StepUnderflowError(IntegrationError):
    pass


class DegenerateInputError(LHKError, ValueError):
    pass


class NegativeRadicandError(DegenerateInputError):
    pass


class SingularConstantsError(DegenerateInputError):
    pass


class DriftTooLargeError(LHKError, ValueError):
    pass


class NoConvergenceError(LHKError, RuntimeError):
    pass


class GridMismatchError(LHKError, ValueError):
    pass
