"""
Error hierarchy for semdepth.

Invalid geometry that occurs legitimately during optimisation (points behind
the camera, samples outside the frame) is carried as validity masks, never
raised. Everything here signals bad input or an unusable configuration.
"""


class SemDepthError(Exception):
    """Base class for all library errors."""


class DomainError(SemDepthError, ValueError):
    """A value outside an operation's mathematical domain."""


class RasterFormatError(SemDepthError):
    """Malformed raster file or out-of-range raster content."""


class DimensionMismatchError(SemDepthError):
    """Rasters or trajectories whose shapes must agree do not."""


class EmptyEvaluationError(SemDepthError):
    """No pixel survived the evaluation masks."""


class SceneCoverageError(SemDepthError):
    """A scene leaves pixels uncovered or renders depths outside the allowed range."""


class ManifestError(SemDepthError):
    """A snippet manifest references missing or inconsistent files."""


class TrajectoryError(SemDepthError):
    """Empty trajectories or trajectories of mismatched length."""


class SelftestFailure(SemDepthError):
    """An oracle-equivalence or gradient check did not pass."""
