"""Exception types raised by the solvers."""


class DegenwaveError(Exception):
    """Base class for all solver errors."""


class InvalidParams(DegenwaveError, ValueError):
    pass


class NotApplicable(DegenwaveError):
    pass


class GridTooShort(DegenwaveError, ValueError):
    pass


class NonFiniteInput(DegenwaveError, ValueError):
    pass


class InvalidProfile(DegenwaveError, ValueError):
    pass


class QuadratureNonConvergent(DegenwaveError):
    pass


class IntegratorFailure(DegenwaveError):
    pass


class InvalidSpeed(DegenwaveError, ValueError):
    pass


class BracketInvalid(DegenwaveError):
    def __init__(self, message, lo_outcome=None, hi_outcome=None):
        super().__init__(message)
        self.lo_outcome = lo_outcome
        self.hi_outcome = hi_outcome


class NonMonotoneTrace(DegenwaveError):
    pass


class TraceTooShort(DegenwaveError):
    pass


class InadmissibleWeight(DegenwaveError, ValueError):
    pass


class RhoHitsZero(DegenwaveError):
    pass


class FixedPointNonConvergent(DegenwaveError):
    pass


class HypothesisViolated(DegenwaveError):
    pass


class WindowEmpty(DegenwaveError, ValueError):
    pass


class ProfileNotSemiFinite(DegenwaveError, ValueError):
    pass


class CFLViolated(DegenwaveError):
    pass


class FrontHitBoundary(DegenwaveError):
    pass


class InsufficientSamples(DegenwaveError):
    pass
