"""Exceptions raised by trackadapt.

Every exception derives from ``TrackingError`` and from the builtin that
best describes it, so callers may catch either.
"""


class TrackingError(Exception):
    """Base class for all trackadapt errors."""


class DomainError(TrackingError, ValueError):
    """A numeric input lies outside the domain of an operation."""


class HistoryOrderError(TrackingError, ValueError):
    """A history bank received a frame index that is not strictly increasing."""


class EmptyCandidatesError(TrackingError, ValueError):
    """Mask selection was asked to choose among zero candidates."""


class MissingPromptError(TrackingError, ValueError):
    """A memory history does not contain exactly one prompted entry."""


class FilterStateError(TrackingError, RuntimeError):
    """A Kalman-type filter was used before it was initiated."""


class FilterDivergenceError(TrackingError, ArithmeticError):
    """The innovation covariance of a filter could not be factorized."""

    def __init__(self, message: str, innovation_cov=None, state=None):
        super().__init__(message)
        self.innovation_cov = innovation_cov
        self.state = state


class TrainingError(TrackingError, RuntimeError):
    """Motion-predictor training failed."""


class EmptyDatasetError(TrainingError):
    """A training dataset yields no windows."""


class TrainingDivergedError(TrainingError):
    """The training loss became NaN or infinite."""

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class AnnotationParseError(TrackingError, ValueError):
    """An annotation or prediction file is malformed."""

    def __init__(self, message: str, path=None, line: int | None = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class ConfigError(TrackingError, ValueError):
    """A configuration or scenario file is invalid."""


class WeightsFormatError(TrackingError, ValueError):
    """A trained-weights file is unreadable or inconsistent."""


class FrameError(TrackingError, RuntimeError):
    """A module error raised while the tracker processed one frame."""

    def __init__(self, frame_index: int, cause: Exception):
        super().__init__(f"frame {frame_index}: {type(cause).__name__}: {cause}")
        self.frame_index = frame_index
        self.cause = cause
