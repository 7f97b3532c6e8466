"""Plausibility monitoring for 2D person detection via body-part cross-checks."""

__version__ = "0.1.0"

from .datamodel import Detection, DetectionClass, GtAnnotation, Scene
from .geometry import Box, area, intersection_area, iou, part_overlap_at_least
from .monitor import AlertPair, MonitorVerdict, per_image_rule, per_object_rule
from .partition import GtPartition, MatchingMode, partition

__all__ = [
    "__version__",
    "AlertPair",
    "Box",
    "Detection",
    "DetectionClass",
    "GtAnnotation",
    "GtPartition",
    "MatchingMode",
    "MonitorVerdict",
    "Scene",
    "area",
    "intersection_area",
    "iou",
    "part_overlap_at_least",
    "partition",
    "per_image_rule",
    "per_object_rule",
]
