"""Exception hierarchy shared by all modules."""


class BGKError(Exception):
    """Base class for every error raised by :mod:`bgkbaro`."""


class GammaOutOfRange(BGKError, ValueError):
    pass


class NegativeDensity(BGKError, ValueError):
    pass


class NegativeValue(BGKError, ValueError):
    pass


class BadAngle(BGKError, ValueError):
    pass


class ZeroVector(BGKError, ValueError):
    pass


class GridTooSmall(BGKError, ValueError):
    pass


class BadBounds(BGKError, ValueError):
    pass


class EmptySurvey(BGKError, ValueError):
    pass


class OutsideIntersection(BGKError, ValueError):
    pass


class SupportOverflow(BGKError, ValueError):
    """An equilibrium support does not fit inside the truncated velocity box."""


class CorrectionFailure(BGKError, RuntimeError):
    """Moment matching would need a multiplier deviating more than 50% from 1."""


class EpsUnresolvable(BGKError, ValueError):
    pass


class BoundViolation(BGKError, AssertionError):
    """Regularized fields escaped their a-priori bounds (implementation bug)."""


class BadQ(BGKError, ValueError):
    pass


class NoConvergence(BGKError, RuntimeError):
    def __init__(self, message, increments=()):
        super().__init__(message)
        self.increments = list(increments)


class CFLViolation(BGKError, ValueError):
    pass


class VacuumBreakdown(BGKError, RuntimeError):
    pass


class GridMismatch(BGKError, ValueError):
    pass


class WrongBranch(BGKError, ValueError):
    pass


class ZeroField(BGKError, ValueError):
    pass


class ConfigError(BGKError):
    """Base for configuration problems; carries every violation found."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError, ValueError):
    pass


class ShockDetected(BGKError, RuntimeError):
    """The reference Euler run steepened past the pre-shock heuristic."""


class SupportValidationError(ValidationError, SupportOverflow):
    """Validation found an initial support reaching past ``Vmax``."""
