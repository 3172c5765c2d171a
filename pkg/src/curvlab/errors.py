"""Exception types shared across the package."""


class CurvlabError(Exception):
    """Base class for all curvlab errors."""


class ConfigurationError(CurvlabError):
    """Invalid configuration: bad resolution, malformed domain, unwritable path."""


class UnsupportedModelError(CurvlabError):
    """Requested (kind, dimension) pair has no built-in model."""


class DegenerateMetricError(CurvlabError):
    """Metric is singular or not positive definite at an evaluation point."""


class DimensionError(CurvlabError):
    """Operation undefined in this dimension, or tensor shapes disagree."""


class PreconditionError(CurvlabError):
    """A documented precondition of an operation is violated."""


class GlobalIntegralUnsupportedError(CurvlabError):
    """Field only supports pointwise evaluation; global quadrature is refused."""


class InvalidModeError(CurvlabError):
    """A constructed perturbation mode violates one of its defining constraints."""


class EigenvalueRangeError(CurvlabError):
    """Spectral parameter lies outside the admissible range."""
