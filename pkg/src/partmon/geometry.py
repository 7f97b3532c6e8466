"""Axis-aligned box arithmetic: area, intersection, IoU, person/part overlap.

Boxes use the COCO (x, y, w, h) convention with x/y the top-left corner.
Coordinates are real-valued; detector outputs are continuous. All comparisons
are exact (no epsilon slack) so results are deterministic and boundary cases
land on the side the decision rules prescribe.
"""

from __future__ import annotations

from dataclasses import dataclass


class DegeneratePartBoxError(ValueError):
    """A body-part box with zero area cannot anchor an overlap test."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in pixel coordinates (left, top, width, height)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box width/height must be non-negative, got w={self.w}, h={self.h}")


def area(b: Box) -> float:
    """Area of the box in pixels^2."""
    return b.w * b.h


def intersection_area(a: Box, b: Box) -> float:
    """Area of the rectangular overlap of two boxes; 0 when disjoint.

    Boxes sharing only an edge or a corner have zero overlap area.
    """
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Two zero-area boxes have IoU 0 by convention: the union is empty, and
    such boxes can never match anything.
    """
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    return inter / union


def part_overlap_at_least(person: Box, part: Box, alpha: float) -> bool:
    """True iff the person box covers at least ``alpha`` of the part box area.

    This is the association test between a person detection and a body-part
    detection: the part belongs to the person when their intersection is at
    least alpha times the part's own area.

    Raises DegeneratePartBoxError for a zero-area part and ValueError for an
    alpha outside the open interval (0, 1).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    part_area = area(part)
    if part_area <= 0:
        raise DegeneratePartBoxError(f"degenerate part box: {part}")
    return intersection_area(person, part) >= alpha * part_area
