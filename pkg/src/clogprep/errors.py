"""Error types raised by the preprocessing pipeline.

Every failure mode that callers are expected to handle gets its own class so
batch drivers can record precise per-sample failure reasons.
"""


class ClogprepError(Exception):
    """Base class for all pipeline errors."""


class MissingFrames(ClogprepError):
    """A frame directory has a gap in its zero-based numbering."""


class DimensionMismatch(ClogprepError):
    """Two containers that must share dimensions do not."""


class BadMagic(ClogprepError):
    """A packed volume file does not start with the expected magic bytes."""


class BadVersion(ClogprepError):
    """A packed volume file declares an unsupported format version."""


class EmptyVolume(ClogprepError):
    """A volume with zero frames (or zero voxels) where content is required."""


class IoFailure(ClogprepError):
    """Reading or writing a file failed at the OS level, or the file is truncated."""


class EmptyManifest(ClogprepError):
    """A manifest operation needs at least one sample record."""


class NoRoiFound(ClogprepError):
    """No overlay-colored pixels exist in the frame."""


class OpenContour(ClogprepError):
    """The overlay contour does not enclose any interior pixels."""


class BadSigma(ClogprepError):
    """Gaussian filter width must be positive."""


class BadCount(ClogprepError):
    """A requested frame count is outside the valid range."""


class DegenerateHistogram(ClogprepError):
    """All voxels share one gray value; no threshold can split them."""


class BadPercentile(ClogprepError):
    """Percentile values must lie in (0, 100]."""


class LengthMismatch(ClogprepError):
    """Parallel label/score sequences differ in length."""


class EmptyInput(ClogprepError):
    """A metric was requested over zero items."""


class TubeOutOfBounds(ClogprepError):
    """A synthetic vessel does not fit inside its region of interest."""


class MissingPrediction(ClogprepError):
    """A test-split sample id is absent from a predictions file."""


class ConfigError(ClogprepError):
    """A pipeline config file is malformed or holds unknown/invalid keys."""


class SentinelCollision(UserWarning):
    """The sentinel color already occurs inside the region of interest.

    Warning, not an error: background separation still completes, but the
    sentinel is no longer guaranteed to be absent from the foreground.
    """
