"""Exception types shared across the package."""


class TpsWarpError(Exception):
    """Base class for every error raised by this package."""


class FormatError(TpsWarpError):
    """A file could not be parsed or violates its declared schema."""


class GeometryError(TpsWarpError):
    """Landmark geometry is degenerate or otherwise unusable."""


class SingularSystemError(GeometryError):
    """The interpolation system is singular or too ill-conditioned to trust."""
