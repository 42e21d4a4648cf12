"""Exception hierarchy.

Two families map onto the CLI exit codes: :class:`ValidationError` (bad
input, exit 2) and :class:`NumericError` (the computation itself cannot
proceed, exit 3).
"""

from __future__ import annotations


class QirrevError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QirrevError, ValueError):
    """An input object violates one of its structural invariants."""

    def __init__(self, message: str, violation: float | None = None) -> None:
        super().__init__(message)
        self.violation = violation

    @property
    def name(self) -> str:
        return type(self).__name__


class NotHermitian(ValidationError):
    pass


class NotUnitTrace(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class NotProjective(ValidationError):
    """Projector family fails idempotence, orthogonality, completeness or label checks."""


class NotTracePreserving(ValidationError):
    pass


class NotUnital(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class InvalidGaussianState(ValidationError):
    pass


class InvalidBath(ValidationError):
    pass


class ConfigError(ValidationError):
    """Scenario file is structurally malformed."""


class NumericError(QirrevError, ArithmeticError):
    """The requested quantity does not exist or cannot be computed reliably."""

    @property
    def name(self) -> str:
        return type(self).__name__


class SingularPower(NumericError):
    pass


class InfiniteSigma(NumericError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None) -> None:
        super().__init__(message)
        self.pair = pair


class InequalityViolated(NumericError):
    pass


class DegenerateSampling(NumericError):
    pass


class GridTooCoarse(NumericError):
    pass


class UnstableStep(NumericError):
    pass
