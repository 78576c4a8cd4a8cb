"""Exception types shared across the package."""


class HarmflowError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(HarmflowError):
    """Vector or matrix arguments disagree with the field dimension."""


class InvalidFieldSpec(HarmflowError):
    """A field descriptor is malformed or inconsistent with its claims."""


class SingularPoint(HarmflowError):
    """Evaluation was requested at (or too close to) a pole of the field."""


class NonfiniteValue(HarmflowError):
    """A computed value, gradient, or Hessian entry is NaN or infinite."""


class CriticalPoint(HarmflowError):
    """The gradient magnitude fell below the configured threshold."""


class NotTangent(HarmflowError):
    """A direction vector is not a unit tangent of the level set."""


class NotHarmonic(HarmflowError):
    """An operation that requires a harmonic field got a non-harmonic one."""


class ScenarioError(HarmflowError):
    """A scenario file failed schema validation."""
