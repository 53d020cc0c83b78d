"""Exception hierarchy shared by all kdvtrail modules."""


class KdVTrailError(Exception):
    """Base class for every error raised by this package."""


class DomainError(KdVTrailError, ValueError):
    pass


# numerics
class NoSignChange(KdVTrailError):
    pass


class MaxIterExceeded(KdVTrailError):
    pass


class SingularJacobian(KdVTrailError):
    pass


class NonConvergent(KdVTrailError):
    pass


class InvalidRule(KdVTrailError):
    pass


class NoiseDominated(KdVTrailError):
    pass


# special functions
class ConvergenceFloor(KdVTrailError):
    pass


# initial data
class NonGeneric(KdVTrailError):
    pass


class InvalidProfile(KdVTrailError):
    pass


# modulation
class DegenerateGap(KdVTrailError):
    pass


class OutsideCusp(KdVTrailError):
    pass


class NotPastCatastrophe(KdVTrailError):
    pass


class EdgeSolveFailed(KdVTrailError):
    pass


class NonNegativeDthetaDv(EdgeSolveFailed):
    pass


class HumpFloorReached(EdgeSolveFailed):
    """The lowest invariant has reached the minimum of the initial profile.

    Past this time the decreasing branch alone no longer describes the
    modulation; the increasing-branch extension is not implemented.
    """


class ContinuationFailed(KdVTrailError):
    pass


# asymptotics
class NegativeRadicand(KdVTrailError):
    pass


# spectral solver
class BlowUp(KdVTrailError):
    pass


class DecayViolation(KdVTrailError):
    pass


class NoOscillations(KdVTrailError):
    pass
