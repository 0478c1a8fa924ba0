"""Exception types raised across the package."""


class RopeSimError(Exception):
    """Base class for all package errors."""


class InvalidScenario(RopeSimError, ValueError):
    pass


class InvalidCurve(RopeSimError, ValueError):
    pass


class InvalidSamples(RopeSimError, ValueError):
    pass


class TensionUnreachable(RopeSimError, ValueError):
    pass


class BranchOrderViolation(RopeSimError, ValueError):
    pass


class InvalidAngle(RopeSimError, ValueError):
    pass


class OutsideIdealWindow(RopeSimError, ValueError):
    pass


class NoEquilibrium(RopeSimError):
    pass


class NoArrest(RopeSimError):
    pass


class NoRest(RopeSimError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ElongationExceeded(RopeSimError):
    """The climber passed the admissible stretch; the partial trajectory is attached."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepTooLarge(RopeSimError):
    pass


class Infeasible(RopeSimError):
    pass


class NotArresting(RopeSimError):
    pass


class BoundViolation(RopeSimError, RuntimeError):
    """A feasible law beat the energy lower bound, which means the simulator is wrong."""


class ConfigError(RopeSimError, ValueError):
    """A scenario file or data file could not be parsed."""
