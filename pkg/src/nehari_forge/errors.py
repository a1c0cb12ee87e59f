"""Exception types raised by the solvers."""


class NehariError(Exception):
    """Base class for all numerical failures in this package."""


class NoZero(NehariError):
    """The scaling map has no zero (some b_i vanishes)."""


class NonConvergence(NehariError):
    pass


class NotInU(NehariError):
    """Some component has a vanishing positive part, so no Nehari scaling exists."""


class ZeroComponent(NehariError):
    pass


class SingularJacobian(NehariError):
    pass


class Divergence(NehariError):
    pass


class BoundGuardTripped(NehariError):
    def __init__(self, message, norm=None, guard=None):
        super().__init__(message)
        self.norm = norm
        self.guard = guard


class StepFloorReached(NehariError):
    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t


class CriterionFails(NehariError):
    pass


class ConfigError(ValueError):
    """Malformed or inadmissible run configuration."""
