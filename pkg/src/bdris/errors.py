"""Exception hierarchy shared across the package."""


class RISError(Exception):
    """Base class for all errors raised by bdris."""


class DimensionMismatch(RISError, ValueError):
    pass


class ZeroVector(RISError, ValueError):
    pass


class RankDeficient(RISError, ValueError):
    pass


class NotPSD(RISError, ValueError):
    pass


class EmptyInput(RISError, ValueError):
    pass


class NonPositiveDistance(RISError, ValueError):
    pass


class AngleOutOfRange(RISError, ValueError):
    pass


class Infeasible(RISError, ValueError):
    """The fixed-reflection targets cannot be met by any block-unitary matrix."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateGroup(RISError, ValueError):
    pass


class DegenerateElement(RISError, ValueError):
    pass


class InvalidArchitecture(RISError, ValueError):
    pass


class NonPositiveArgument(RISError, ValueError):
    pass


class UnsupportedOperatorCount(RISError, ValueError):
    pass


class ZeroConstraint(RISError, ValueError):
    pass


class GroupSizeTooSmall(RISError, ValueError):
    pass


class NotUnitaryInput(RISError, ValueError):
    pass


class InsufficientPoints(RISError, ValueError):
    pass


class NonPositivePower(RISError, ValueError):
    pass


class InvalidConfig(RISError, ValueError):
    """Raised for malformed experiment configurations; ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
