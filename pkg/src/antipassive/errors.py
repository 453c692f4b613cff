"""Exception and warning types shared across the package."""


class AntipassiveError(Exception):
    """Base class for all package errors."""


class DimensionError(AntipassiveError, ValueError):
    pass


class SingularResolvent(AntipassiveError):
    """jw is (numerically) an eigenvalue of A."""


class NotStable(AntipassiveError):
    pass


class IllPosed(AntipassiveError):
    """An algebraic loop or Cayley map is singular."""


class PhaseOutOfRange(AntipassiveError, ValueError):
    pass


class AlreadyPassive(AntipassiveError):
    """No destabilizing passive R exists: the plant is itself passive."""


class NonInteriorState(AntipassiveError, ValueError):
    pass


class ModeUnavailable(AntipassiveError, ValueError):
    pass


class UnknownScenario(AntipassiveError, KeyError):
    pass


class NearPiPhase(UserWarning):
    """All-pass phase close to -pi; the resulting pole sits near the origin."""
