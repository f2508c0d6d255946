"""Pedestrian tracking on a ground map built from camera view angles.

Detections are projected from the image onto a ground map plane, boxed with
region-standardized widths, filtered with a density-aware Kalman filter and
associated in two score stages.
"""

__version__ = "0.1.0"

from .errors import (
    AboveHorizonError,
    ConfigError,
    GeometryDomainError,
    InputFormatError,
    MapRangeError,
    RLMError,
)
from .geometry import CameraModel, map_point, unmap_point
from .metrics import evaluate
from .tracker import Tracker, TrackerConfig, run_sequence

__all__ = [
    "AboveHorizonError",
    "CameraModel",
    "ConfigError",
    "GeometryDomainError",
    "InputFormatError",
    "MapRangeError",
    "RLMError",
    "Tracker",
    "TrackerConfig",
    "evaluate",
    "map_point",
    "run_sequence",
    "unmap_point",
]
