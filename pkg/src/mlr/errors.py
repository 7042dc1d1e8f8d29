"""Exception types shared by all mlr modules.

OS-level failures (unwritable paths, disk errors) are not wrapped and
propagate as the interpreter's native ``OSError``.
"""


class MlrError(Exception):
    """Base class for all domain errors raised by this package."""


class ShapeError(MlrError):
    """A vector, raster or matrix has the wrong dimensions or arity."""


class ParseError(MlrError):
    """A file (manifest, image, world, model) is malformed."""


class InvalidLabel(MlrError):
    """A session label does not match the YYYY-MM-DDTHH-MM-SS format."""


class SessionConflict(MlrError):
    """The target session directory already holds incompatible data."""


class MissingAsset(MlrError):
    """A manifest references an image file that does not exist."""

    def __init__(self, index: int, path: str):
        super().__init__(f"record {index}: missing image file {path!r}")
        self.index = index
        self.path = path


class InsufficientData(MlrError):
    """Too few samples for the requested operation."""


class InsufficientVariance(MlrError):
    """The centered data carries no usable variance (all-zero spectrum)."""


class ConfigError(MlrError):
    """A parameter is outside its valid range."""


class NumericalError(MlrError):
    """The eigensolver failed to converge."""


class VersionError(MlrError):
    """A model file declares an unsupported format version."""


class CorruptModel(MlrError):
    """A model file violates the eigenspace invariants."""


class DegenerateScale(MlrError):
    """Every scaling component is numerically zero; scaled metrics are undefined."""


class InvalidWorld(MlrError):
    """A world description is geometrically unusable (open arena, bad start)."""


class NotReady(MlrError):
    """Autonomous mode was requested before a model and dataset were loaded."""


class CollisionDuringDemo(MlrError):
    """The scripted teacher collided while recording; the demo is unusable."""
