"""Exception hierarchy for the toolkit.

Every failure mode named by the operations maps to one class so callers can
catch narrowly. All derive from :class:`OpenDotError`.
"""


class OpenDotError(Exception):
    """Base class for all toolkit errors."""


class InvalidBoundsError(OpenDotError, ValueError):
    pass


class TooFewPointsError(OpenDotError, ValueError):
    pass


class LengthMismatchError(OpenDotError, ValueError):
    pass


class GridMismatchError(OpenDotError, ValueError):
    pass


class OutOfDomainError(OpenDotError, ValueError):
    pass


class SectorViolationError(OpenDotError, ValueError):
    """Complex scaling parameter outside the admissible analyticity sector."""


class DegenerateSpectrumError(OpenDotError):
    """Numerical eigenvalue gap below the degeneracy threshold."""


class TruncationTooSmallError(OpenDotError):
    """Eigenfunctions do not decay at the artificial boundary."""


class ChannelCountError(OpenDotError, ValueError):
    pass


class DegenerateLevelError(OpenDotError):
    pass


class NotEmbeddedError(OpenDotError):
    pass


class ThresholdCollisionError(OpenDotError):
    pass


class NearThresholdError(OpenDotError):
    pass


class SingularSystemError(OpenDotError):
    """Nystrom matrix numerically singular (exceptional energy)."""


class ExtrapolationFailureError(OpenDotError):
    pass


class NoPoleInWindowError(OpenDotError):
    pass


class ContinuumContaminationError(OpenDotError):
    pass


class RangeTooNarrowError(OpenDotError):
    pass


class BudgetExceededError(OpenDotError):
    pass


class ConfigError(OpenDotError, ValueError):
    pass


class MissingColumnsError(OpenDotError, KeyError):
    pass
