"""Edge video summarization toolkit.

Thumbnail containers in, per-thumbnail relevance out, variable-speed
playback schedules served over a small client/server protocol.
"""

from .analyzer import AnalyzeConfig, PreferenceProfile, RelevanceTrack, analyze, exhaustive_scan
from .classifier import ThumbnailClassifier, TrainConfig, train
from .container import ThumbnailContainer, decode, encode, generate, reduction_report
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    EvsError,
    FormatError,
    ModelError,
    NotFoundError,
    RangeError,
    ShapeError,
    TransportError,
)
from .model import ClassifierModel, classify, load_model, param_count
from .scheduler import PlaybackSchedule, build_schedule, emit_edl, parse_edl, segments_from_track
from .tensor import GradTape, Tensor

__version__ = "0.1.0"

__all__ = [
    "AnalyzeConfig",
    "ClassifierModel",
    "ConfigError",
    "ContractError",
    "DataError",
    "EvsError",
    "FormatError",
    "GradTape",
    "ModelError",
    "NotFoundError",
    "PlaybackSchedule",
    "PreferenceProfile",
    "RangeError",
    "RelevanceTrack",
    "ShapeError",
    "Tensor",
    "ThumbnailClassifier",
    "ThumbnailContainer",
    "TrainConfig",
    "TransportError",
    "__version__",
    "analyze",
    "build_schedule",
    "classify",
    "decode",
    "emit_edl",
    "encode",
    "exhaustive_scan",
    "generate",
    "load_model",
    "param_count",
    "parse_edl",
    "reduction_report",
    "segments_from_track",
    "train",
]
