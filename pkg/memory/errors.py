"""
Exception hierarchy for the track recall system.

Every error raised by the domain core derives from TrackRecallError, which is
itself a ValueError so callers that only guard against bad input keep working.
"""


class TrackRecallError(ValueError):
    """Base class for all errors raised by the recall pipeline."""


class PatternError(TrackRecallError):
    """Invalid bit/bipolar pattern or corruption parameter."""


class LibraryError(TrackRecallError):
    """Pattern library invariant violated or library could not be built."""


class GeometryError(TrackRecallError):
    """Invalid detector geometry, field or particle state."""


class LearningError(TrackRecallError):
    """Weight matrix could not be constructed or rescaled."""


class SolverError(TrackRecallError):
    """Ising problem or solver configuration is unusable."""


class ClassificationError(TrackRecallError):
    """Classifier mode, calibration or metric input is inconsistent."""


class HoughError(TrackRecallError):
    """Hough binning or bank assignment failed."""


class ConfigError(TrackRecallError):
    """Experiment configuration is inconsistent."""
