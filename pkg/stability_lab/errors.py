"""Exception hierarchy for stability-lab.

Every numerical failure is raised, never silently degraded. Errors that
point at a place on the time axis carry it as ``location`` (or
``interval`` for quadrature) so reports can name where things broke.
"""

from typing import Optional, Tuple


class StabilityLabError(Exception):
    """Base class for all stability-lab errors."""


class ConfigError(StabilityLabError, ValueError):
    """Invalid configuration value or defaults file."""


class ParseError(StabilityLabError, ValueError):
    """Coefficient expression string could not be parsed."""

    def __init__(self, message: str, text: str = "", position: Optional[int] = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position} in {text!r}"
        super().__init__(message)


class UnboundParameter(StabilityLabError, LookupError):
    """An expression references a parameter with no binding."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} is not bound")


class NonDifferentiable(StabilityLabError, TypeError):
    """Expression node kind has no derivative rule."""


class DomainError(StabilityLabError, ValueError):
    """ln / sqrt / half-integer power applied outside the positive reals."""

    def __init__(self, message: str, location: Optional[float] = None):
        self.location = location
        if location is not None:
            message = f"{message} (t={location:.6g})"
        super().__init__(message)


class QuadratureFailure(StabilityLabError, ArithmeticError):
    """Adaptive quadrature did not meet its tolerance."""

    def __init__(self, interval: Tuple[float, float], message: str = "tolerance not met"):
        self.interval = (float(interval[0]), float(interval[1]))
        super().__init__(f"{message} on [{self.interval[0]:.12g}, {self.interval[1]:.12g}]")


class StepSizeUnderflow(StabilityLabError, ArithmeticError):
    """ODE integrator could not advance; usually a blow-up or tolerance pathology."""

    def __init__(self, location: float, message: str = "step size underflow"):
        self.location = float(location)
        super().__init__(f"{message} at t={self.location:.6g}")


class NonPositiveInput(StabilityLabError, ValueError):
    """A function required to be positive is not."""

    def __init__(self, location: float, value: float):
        self.location = float(location)
        self.value = float(value)
        super().__init__(f"input must be positive, got {self.value:.6g} at t={self.location:.6g}")


class OutOfRange(StabilityLabError, ValueError):
    """Query point outside the traced interval."""


class TheoryInapplicable(StabilityLabError):
    """The discriminant violates the positivity/reality the criteria assume."""

    reason = "theory inapplicable"

    def __init__(self, location: float, value: complex):
        self.location = float(location)
        self.value = value
        super().__init__(f"{self.reason} at t={self.location:.6g} (D={value:.6g})")


class ComplexDiscriminant(TheoryInapplicable):
    reason = "ComplexDiscriminant"


class NonPositiveDiscriminant(TheoryInapplicable):
    reason = "NonPositiveDiscriminant"
