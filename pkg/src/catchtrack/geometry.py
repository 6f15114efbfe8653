"""Boxes, detections and the ball/person collision predicate.

Persons are axis-aligned rectangles (``RBox``), balls are circles (``CBox``).
All coordinates are integer pixels; fractional input is floor-rounded on
ingestion with :func:`to_pixel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .errors import EmptyRegion

PERSON = "person"
BALL = "ball"
CLASSES = (PERSON, BALL)

Point = Tuple[int, int]


def to_pixel(value: float) -> int:
    return int(math.floor(value))


@dataclass(frozen=True, slots=True)
class RBox:
    """Rectangle with inclusive pixel corners.

    Negative coordinates are representable so that a box can exist before
    :func:`clip_to_frame` brings it back inside the frame.
    """

    x_left: int
    y_top: int
    x_right: int
    y_bottom: int

    def __post_init__(self):
        if self.x_left > self.x_right or self.y_top > self.y_bottom:
            raise ValueError(f"inverted box {tuple(self)}")

    def __iter__(self):
        return iter((self.x_left, self.y_top, self.x_right, self.y_bottom))

    @property
    def width(self) -> int:
        return self.x_right - self.x_left + 1

    @property
    def height(self) -> int:
        return self.y_bottom - self.y_top + 1

    def translate(self, dx: int, dy: int) -> "RBox":
        return RBox(self.x_left + dx, self.y_top + dy, self.x_right + dx, self.y_bottom + dy)


@dataclass(frozen=True, slots=True)
class CBox:
    cx: int
    cy: int
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"negative radius {self.radius}")

    def __iter__(self):
        return iter((self.cx, self.cy, self.radius))

    def translate(self, dx: int, dy: int) -> "CBox":
        return CBox(self.cx + dx, self.cy + dy, self.radius)


Box = Union[RBox, CBox]


@dataclass(frozen=True, slots=True)
class Detection:
    """One detector output.

    ``id_hint`` is the identity the scenario source claims for this box (used
    only to seed the gallery and by the oracle extractor); ``feature`` is an
    optional pre-computed appearance vector attached by the noise model.
    """

    box: Box
    cls: str
    confidence: float = 1.0
    frame: int = 0
    id_hint: Optional[int] = None
    feature: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.cls == PERSON and not isinstance(self.box, RBox):
            raise ValueError("person detections carry an RBox")
        if self.cls == BALL and not isinstance(self.box, CBox):
            raise ValueError("ball detections carry a CBox")
        if self.cls not in CLASSES:
            raise ValueError(f"unknown class {self.cls!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def with_box(self, box: Box) -> "Detection":
        return Detection(box, self.cls, self.confidence, self.frame, self.id_hint, self.feature)


@dataclass(frozen=True, slots=True)
class TaggedDetection:
    detection: Detection
    identity: int

    @property
    def cls(self) -> str:
        return self.detection.cls

    @property
    def box(self) -> Box:
        return self.detection.box

    @property
    def frame(self) -> int:
        return self.detection.frame


def center(box: Box) -> Point:
    if isinstance(box, CBox):
        return box.cx, box.cy
    return (box.x_left + box.x_right) // 2, (box.y_top + box.y_bottom) // 2


def contains(person: RBox, point: Point) -> bool:
    px, py = point
    return person.x_left <= px <= person.x_right and person.y_top <= py <= person.y_bottom


def bounding_rbox(box: Box) -> RBox:
    return cbox_to_rbox(box) if isinstance(box, CBox) else box


def cbox_to_rbox(c: CBox, width: int | None = None, height: int | None = None) -> RBox:
    """Circumscribed square of a circle, clipped when frame dims are given."""
    r = RBox(c.cx - c.radius, c.cy - c.radius, c.cx + c.radius, c.cy + c.radius)
    if width is not None and height is not None:
        r = clip_to_frame(r, width, height)
    return r


def clip_to_frame(box: RBox, width: int, height: int) -> RBox:
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    if box.x_right < 0 or box.y_bottom < 0 or box.x_left > width - 1 or box.y_top > height - 1:
        raise EmptyRegion(f"{tuple(box)} lies outside {width}x{height}")
    return RBox(
        max(box.x_left, 0),
        max(box.y_top, 0),
        min(box.x_right, width - 1),
        min(box.y_bottom, height - 1),
    )


def box_to_row(box: Box) -> Tuple[int, int, int, int]:
    """Four-integer record encoding; balls are stored as their circumscribed square."""
    return tuple(bounding_rbox(box))


def row_to_box(row, cls: str) -> Box:
    x1, y1, x2, y2 = (int(v) for v in row)
    if cls == BALL:
        return CBox((x1 + x2) // 2, (y1 + y2) // 2, (x2 - x1) // 2)
    return RBox(x1, y1, x2, y2)
