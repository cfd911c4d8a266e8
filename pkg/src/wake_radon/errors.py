"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class WakeRadonError(Exception):
    exit_code = 3


class DimensionError(WakeRadonError, ValueError):
    """Array shapes do not agree with the image or Radon grid."""


class ConfigurationError(WakeRadonError, ValueError):
    """Invalid parameters (grid sizes, solver constants, mask geometry)."""

    exit_code = 1


class DivergenceError(WakeRadonError, FloatingPointError):
    """A MYULA iterate became non-finite."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


class DetectionError(WakeRadonError):
    """A detection stage could not produce a candidate."""


class GeometryError(WakeRadonError):
    """A candidate half-line covers too few pixels."""


class NormalizationError(WakeRadonError, ZeroDivisionError):
    """Image mean is zero, so the F_I ratio is undefined."""


class SpecificationError(WakeRadonError, ValueError):
    """A scene specification cannot be rendered."""

    exit_code = 1


class ImageIOError(WakeRadonError, OSError):
    """Unreadable, truncated or unsupported image file."""

    exit_code = 2
