import pytest
from hypothesis import given, strategies as st

from catchtrack.adaptive import (
    COLLISION_FOUND,
    NO_COLLISION,
    ActivityRegion,
    activity_region,
    collision_gate,
    full_frame,
    has_collision,
    margins_for,
    remap_detections,
    to_crop,
    visible_in,
)
from catchtrack.errors import RemapOutOfBounds
from catchtrack.geometry import BALL, PERSON, CBox, Detection, RBox, TaggedDetection, bounding_rbox, contains

W, H = 960, 540


def test_region_examples():
    r = activity_region([RBox(100, 100, 200, 200)], 10, 20, W, H)
    assert r.rect == RBox(90, 80, 210, 220)
    assert activity_region([], 10, 10, W, H).rect == RBox(0, 0, 959, 539)
    assert activity_region([RBox(0, 0, 959, 539)], 5, 5, W, H).rect == RBox(0, 0, 959, 539)
    with pytest.raises(ValueError):
        activity_region([RBox(0, 0, 1, 1)], -1, 0, W, H)


def test_region_covers_circles():
    r = activity_region([CBox(500, 300, 8), RBox(100, 100, 120, 140)], 0, 0, W, H)
    assert r.rect == RBox(100, 100, 508, 308)


def test_default_margins():
    assert margins_for(W, H, 0.1, 0.1) == (96, 54)


def test_remap_examples():
    d = Detection(RBox(10, 10, 20, 20), PERSON)
    assert remap_detections([d], full_frame(W, H)) == [d]
    region = ActivityRegion(RBox(90, 80, 400, 400))
    assert remap_detections([d], region)[0].box == RBox(100, 90, 110, 100)
    with pytest.raises(RemapOutOfBounds):
        remap_detections([Detection(RBox(0, 0, 500, 10), PERSON)], region)


def test_gate_examples():
    p = TaggedDetection(Detection(RBox(0, 0, 40, 80), PERSON), 1)
    b = TaggedDetection(Detection(CBox(20, 40, 5), BALL), 1)
    assert collision_gate([p, b]).reason == COLLISION_FOUND and collision_gate([p, b]).run_downstream
    assert collision_gate([p]).reason == NO_COLLISION and not collision_gate([p]).run_downstream
    assert collision_gate([]).run_downstream is False
    # works on raw detections too
    assert has_collision([p.detection, b.detection])


coord = st.integers(-100, 1100)


@st.composite
def detections(draw):
    out = []
    for _ in range(draw(st.integers(0, 6))):
        if draw(st.booleans()):
            x1, x2 = sorted((draw(coord), draw(coord)))
            y1, y2 = sorted((draw(coord), draw(coord)))
            out.append(Detection(RBox(x1, y1, x2, y2), PERSON, id_hint=draw(st.integers(1, 5))))
        else:
            out.append(Detection(CBox(draw(coord), draw(coord), draw(st.integers(0, 20))), BALL))
    return out


@st.composite
def regions(draw):
    x1, x2 = sorted((draw(st.integers(0, W - 1)), draw(st.integers(0, W - 1))))
    y1, y2 = sorted((draw(st.integers(0, H - 1)), draw(st.integers(0, H - 1))))
    return ActivityRegion(RBox(x1, y1, x2, y2))


@given(detections(), regions())
def test_visible_in_equals_crop_then_remap(dets, region):
    assert visible_in(dets, region) == remap_detections(to_crop(dets, region), region)


@given(detections(), regions())
def test_round_trip_exact_for_contained(dets, region):
    inside = [d for d in dets if _within(bounding_rbox(d.box), region.rect) or
              (isinstance(d.box, CBox) and contains(region.rect, (d.box.cx, d.box.cy)))]
    back = remap_detections(to_crop(inside, region), region)
    assert back == inside


def _touches_frame(b):
    return b.x_right >= 0 and b.y_bottom >= 0 and b.x_left <= W - 1 and b.y_top <= H - 1


def test_off_frame_hull_falls_back_to_full_frame():
    assert activity_region([CBox(0, -1, 0)], 0, 0, W, H).rect == full_frame(W, H).rect


def _within(b, r):
    return r.x_left <= b.x_left and r.y_top <= b.y_top and b.x_right <= r.x_right and b.y_bottom <= r.y_bottom


@given(detections(), st.integers(0, 200), st.integers(0, 200), st.integers(0, 50), st.integers(0, 50))
def test_region_contains_inflated_boxes_and_is_monotone(dets, dx, dy, ex, ey):
    # detector output overlaps the frame; a hull wholly outside it falls back to the full frame
    boxes = [d.box for d in dets if _touches_frame(bounding_rbox(d.box))]
    small = activity_region(boxes, dx, dy, W, H)
    big = activity_region(boxes, dx + ex, dy + ey, W, H)
    assert _within(small.rect, big.rect)
    for b in boxes:
        r = bounding_rbox(b)
        grown = RBox(max(r.x_left - dx, 0), max(r.y_top - dy, 0), min(r.x_right + dx, W - 1), min(r.y_bottom + dy, H - 1))
        if grown.x_left <= grown.x_right and grown.y_top <= grown.y_bottom:
            assert _within(grown, small.rect)
