"""Exception and warning types shared across the package."""


class HawkfolError(Exception):
    """Base class for all package errors."""


class ChartExceeded(HawkfolError):
    """A point (or a finite-difference stencil around it) left the coordinate chart."""


class DegenerateMetric(HawkfolError):
    """The metric is not positive definite at a requested point."""


class UnknownPreset(HawkfolError):
    """Requested preset name is not registered."""


class InvalidParams(HawkfolError):
    """Preset parameters are out of range or malformed."""


class StepSizeUnderflow(HawkfolError):
    """An ODE integration would require a step below machine resolution."""


class NonEmbedded(HawkfolError):
    """A graph surface has radial factor 1 + phi <= 0 somewhere."""


class DegenerateInducedMetric(HawkfolError):
    """The induced surface metric is singular at a node."""


class NotOrthogonal(HawkfolError):
    """Right-hand side carries kernel content where none is allowed."""


class UnsupportedDegree(HawkfolError):
    """Closed-form sphere moments are only tabulated up to degree six."""


class NonConvergence(HawkfolError):
    """Newton iteration did not reach the requested tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DegenerateHessian(HawkfolError):
    """The concentration-scalar Hessian is too ill conditioned to center the solve."""


class ContinuationBroken(HawkfolError):
    """Radial continuation failed after step halving; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NoRoot(HawkfolError):
    """Area matching between the two quartic expansions has no root at this parameter."""


class BandLimitExceeded(UserWarning):
    """A node field carries noticeable energy above the grid band limit."""
