"""Activity-region cropping and collision inspection.

The region for frame ``t+1`` is the hull of frame ``t``'s boxes grown by a
margin; the collision gate lets a frame skip identity association when no
ball center falls inside any person box. The gate works on raw detections
because the collision predicate needs geometry only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

from .errors import EmptyRegion, RemapOutOfBounds
from .geometry import (
    BALL,
    PERSON,
    CBox,
    Detection,
    RBox,
    TaggedDetection,
    bounding_rbox,
    center,
    clip_to_frame,
    contains,
)

COLLISION_FOUND = "collision_found"
NO_COLLISION = "no_collision"


@dataclass(frozen=True)
class ActivityRegion:
    rect: RBox
    source_frame: int = -1
    margins: tuple = (0, 0)

    @property
    def origin(self):
        return self.rect.x_left, self.rect.y_top

    @property
    def width(self) -> int:
        return self.rect.width

    @property
    def height(self) -> int:
        return self.rect.height

    @property
    def area(self) -> int:
        return self.rect.width * self.rect.height


@dataclass(frozen=True)
class GateDecision:
    run_downstream: bool
    reason: str


def full_frame(frame_w: int, frame_h: int, source_frame: int = -1) -> ActivityRegion:
    return ActivityRegion(RBox(0, 0, frame_w - 1, frame_h - 1), source_frame, (0, 0))


def activity_region(
    boxes: Sequence,
    dx: int,
    dy: int,
    frame_w: int,
    frame_h: int,
    source_frame: int = -1,
) -> ActivityRegion:
    """Hull of ``boxes`` grown by ``(dx, dy)`` and clipped; full frame if empty."""
    if dx < 0 or dy < 0:
        raise ValueError("margins must be non-negative")
    rects = [bounding_rbox(b) for b in boxes]
    if not rects:
        return full_frame(frame_w, frame_h, source_frame)
    hull = RBox(
        min(r.x_left for r in rects) - dx,
        min(r.y_top for r in rects) - dy,
        max(r.x_right for r in rects) + dx,
        max(r.y_bottom for r in rects) + dy,
    )
    try:
        rect = clip_to_frame(hull, frame_w, frame_h)
    except EmptyRegion:
        return full_frame(frame_w, frame_h, source_frame)
    return ActivityRegion(rect, source_frame, (dx, dy))


def margins_for(frame_w: int, frame_h: int, dx_frac: float, dy_frac: float):
    return int(dx_frac * frame_w), int(dy_frac * frame_h)


def to_crop(detections: Sequence[Detection], region: ActivityRegion) -> List[Detection]:
    """What a detector run on the region crop would report, in crop coordinates.

    Rectangles are clipped to the crop; circles are kept whole if their
    center is inside. Anything else is invisible.
    """
    ox, oy = region.origin
    w, h = region.width, region.height
    out = []
    for d in detections:
        box = d.box
        if isinstance(box, CBox):
            cx, cy = box.cx - ox, box.cy - oy
            if 0 <= cx < w and 0 <= cy < h:
                out.append(d.with_box(CBox(cx, cy, box.radius)))
            continue
        try:
            local = clip_to_frame(box.translate(-ox, -oy), w, h)
        except EmptyRegion:
            continue
        out.append(d.with_box(local))
    return out


def remap_detections(detections: Sequence[Detection], region: ActivityRegion) -> List[Detection]:
    """Translate crop-coordinate detections back into frame coordinates."""
    ox, oy = region.origin
    w, h = region.width, region.height
    out = []
    for d in detections:
        box = d.box
        if isinstance(box, CBox):
            inside = 0 <= box.cx < w and 0 <= box.cy < h
        else:
            inside = 0 <= box.x_left and 0 <= box.y_top and box.x_right < w and box.y_bottom < h
        if not inside:
            raise RemapOutOfBounds(f"{box} outside crop {w}x{h}")
        out.append(d.with_box(box.translate(ox, oy)))
    return out


def visible_in(detections: Sequence[Detection], region: ActivityRegion) -> List[Detection]:
    """``remap_detections(to_crop(dets, region), region)`` without the round trip.

    Detections wholly inside the region come back as the same objects;
    rectangles that straddle its border are clipped to it.
    """
    rect = region.rect
    x0, y0, x1, y1 = rect.x_left, rect.y_top, rect.x_right, rect.y_bottom
    out = []
    for d in detections:
        box = d.box
        if isinstance(box, CBox):
            if x0 <= box.cx <= x1 and y0 <= box.cy <= y1:
                out.append(d)
            continue
        if box.x_right < x0 or box.y_bottom < y0 or box.x_left > x1 or box.y_top > y1:
            continue
        if x0 <= box.x_left and y0 <= box.y_top and box.x_right <= x1 and box.y_bottom <= y1:
            out.append(d)
        else:
            out.append(d.with_box(RBox(max(box.x_left, x0), max(box.y_top, y0),
                                       min(box.x_right, x1), min(box.y_bottom, y1))))
    return out


def has_collision(detections: Sequence) -> bool:
    """Geometric ball-in-person test; accepts raw or tagged detections."""
    persons = [d.box for d in detections if d.cls == PERSON]
    if not persons:
        return False
    for d in detections:
        if d.cls == BALL:
            c = center(d.box)
            if any(contains(p, c) for p in persons):
                return True
    return False


def collision_gate(frame: Sequence) -> GateDecision:
    if has_collision(frame):
        return GateDecision(True, COLLISION_FOUND)
    return GateDecision(False, NO_COLLISION)
