"""Exception hierarchy for vtvkit.

Every error raised on purpose by the package derives from ``VTVError`` so
callers (and the CLI) can catch them in one place.
"""


class VTVError(Exception):
    """Base class for all package errors."""


# core / io
class MissingPath(VTVError, FileNotFoundError):
    pass


class InconsistentDimensions(VTVError, ValueError):
    pass


class DecodeFailure(VTVError, ValueError):
    pass


class WriteFailure(VTVError, OSError):
    pass


class BadMagic(DecodeFailure):
    pass


class TruncatedPayload(DecodeFailure):
    pass


# flow
class DimensionMismatch(VTVError, ValueError):
    pass


class KeyframeOutOfRange(VTVError, IndexError):
    pass


class DegenerateTarget(VTVError, ValueError):
    pass


# masking
class TooFewFrames(VTVError, ValueError):
    pass


class GeometryMismatch(VTVError, ValueError):
    pass


# numerics
class ShapeMismatch(VTVError, ValueError):
    pass


class OddDimension(VTVError, ValueError):
    pass


class EmptyMask(VTVError, ValueError):
    pass


class LabelOutOfRange(VTVError, IndexError):
    pass


class NegativeInput(VTVError, ValueError):
    pass


# force fields
class SourceTooSmall(VTVError, ValueError):
    pass


class TargetSmallerThanSource(VTVError, ValueError):
    pass


# qa
class MissingAnnotation(VTVError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InfeasibleMix(VTVError, ValueError):
    pass


class InsufficientHeldOutObjects(VTVError, ValueError):
    pass


# cli
class ConfigError(VTVError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
