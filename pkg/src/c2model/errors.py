"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`C2Error`,
so callers (and the CLI) can separate model failures from programming bugs.
"""


class C2Error(Exception):
    """Base class for all package errors."""


class NumericError(C2Error, ValueError):
    """A quantity cannot be evaluated at the requested point."""


class ZeroVelocity(NumericError):
    """Speed is (numerically) zero, so the tangent direction is undefined."""


class WheelAtRotationCenter(NumericError):
    """The wheel sits on the instantaneous center of rotation."""


class UnresolvableInterval(NumericError):
    """Requested time lies in a stop whose tangent limits disagree."""


class SteeringOutOfRange(NumericError):
    """Center wheel angle outside the open interval (-pi/2, pi/2)."""


class OutOfRange(NumericError):
    """Steering wheel angle outside the image of the declared wheel-angle range."""


class DegenerateDesign(NumericError):
    """Least-squares design matrix is rank deficient."""


class NonMonotoneSteering(NumericError):
    """Steering polynomial is not strictly increasing on its declared range."""


class ZeroReferenceEnergy(NumericError):
    """Reference channel is identically zero, the slope fit is undefined.

    The partially filled comparison (mu and sigma valid, ``m`` NaN) is
    attached as ``comparison``.
    """

    def __init__(self, message, comparison=None):
        super().__init__(message)
        self.comparison = comparison


class NoOverlap(NumericError):
    """Two recordings share no common time range."""


class NonPositiveStep(C2Error, ValueError):
    pass


class OutOfDomain(C2Error, ValueError):
    """Evaluation time outside the trajectory domain."""


class InputError(C2Error, ValueError):
    """Invalid input data (shape, ordering, finiteness)."""


class TooFewSamples(InputError):
    pass


class NonMonotoneTime(InputError):
    """Timestamps are not strictly increasing.

    ``index`` is the zero-based position of the offending sample when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ParseError(InputError):
    """File could not be parsed; ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(InputError):
    """Vehicle configuration violates its invariants."""
