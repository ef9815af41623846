"""Exception hierarchy.

Geometry failures and configuration failures are kept in separate branches so
that callers (the CLI in particular) can map them onto distinct exit codes.
"""


class PdopError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(PdopError):
    """The satellite geometry cannot support a position solution."""


class DegenerateGeometry(GeometryError):
    """Coincident points, or a rank-deficient / ill-conditioned normal matrix."""


class InsufficientSatellites(GeometryError):
    """Fewer than three satellites survived the elevation mask."""


class ConfigError(PdopError, ValueError):
    """Invalid user input (scenario files, overrides, matrices)."""


class ParseError(ConfigError):
    """A scenario or matrix file could not be parsed."""


class ValidationError(ConfigError):
    """Parsed input violates a documented invariant."""


class NotPsd(ValidationError):
    """A covariance component is not symmetric positive semi-definite."""


class DimensionMismatch(ConfigError):
    """Array shapes are inconsistent with the number of satellites."""


class SingularMatrix(PdopError, ValueError):
    """A matrix that must be inverted is numerically singular."""


class InsufficientSamples(ConfigError):
    """Monte Carlo run requested with fewer than two samples."""
