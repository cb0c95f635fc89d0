"""Exception types shared across the package.

Computational failures derive from :class:`ClrSplineError` so the CLI can
map them to exit code 1; bad configuration or unreadable input maps to
exit code 2 via :class:`ConfigError` / :class:`ParseError`.
"""


class ClrSplineError(Exception):
    """Base class for computational failures in this package."""


class SmoothingConditionError(ClrSplineError):
    """Observation count does not exceed the spline-space dimension."""


class SchoenbergWhitneyError(ClrSplineError):
    """Some basis-function support contains no data abscissa."""


class RankDeficiencyError(ClrSplineError):
    """The penalized normal equations are not positive definite."""


class EnvelopeError(ClrSplineError):
    """Accept-reject proposal density exceeded the envelope constant."""


class MeshMismatchError(ClrSplineError):
    """Two grids expected on a common mesh differ."""


class ParseError(ClrSplineError):
    """Malformed input file."""


class ConfigError(ClrSplineError):
    """Invalid run configuration."""
