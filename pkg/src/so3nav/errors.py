"""Typed errors shared across the toolkit."""


class So3NavError(Exception):
    """Base class for all package errors."""


class NotSkewSymmetric(So3NavError):
    """Input matrix is not skew-symmetric within tolerance."""


class NotSymmetric(So3NavError):
    """Input matrix is not symmetric within tolerance."""


class DegenerateAverage(So3NavError):
    """Sum of body z-axes is too small; the average direction is undefined."""


class RankDeficient(So3NavError):
    """Average-dynamics normal matrix lost tangent rank; projector undefined."""


class RateMismatch(So3NavError):
    """Step dt does not match the operator model's discretization rate."""


class PoleOnAxis(So3NavError):
    """Transfer function denominator vanishes on the imaginary axis."""


class EmptyAfterTrim(So3NavError):
    """A trial has no samples left after dead-time trimming."""


class InsufficientData(So3NavError):
    """Too few samples for the number of free parameters."""


class DegenerateReference(So3NavError):
    """Fit denominator is zero because the target series is constant."""


class IOFailure(So3NavError):
    """Session export failed (empty session or filesystem error)."""
