import pytest
from hypothesis import given, strategies as st

from catchtrack.errors import EmptyRegion
from catchtrack.geometry import (
    BALL,
    PERSON,
    CBox,
    Detection,
    RBox,
    box_to_row,
    cbox_to_rbox,
    center,
    clip_to_frame,
    contains,
    row_to_box,
    to_pixel,
)


@pytest.mark.parametrize(
    "box, expected",
    [(RBox(0, 0, 10, 10), (5, 5)), (RBox(2, 2, 2, 2), (2, 2)), (RBox(0, 0, 5, 3), (2, 1))],
)
def test_center(box, expected):
    assert center(box) == expected


def test_center_of_circle_is_its_center():
    assert center(CBox(7, 9, 3)) == (7, 9)


@pytest.mark.parametrize("point, inside", [((5, 5), True), ((10, 10), True), ((11, 5), False), ((0, 0), True)])
def test_contains_uses_closed_intervals(point, inside):
    assert contains(RBox(0, 0, 10, 10), point) is inside


def test_cbox_to_rbox():
    assert cbox_to_rbox(CBox(5, 5, 3)) == RBox(2, 2, 8, 8)
    assert cbox_to_rbox(CBox(0, 0, 0)) == RBox(0, 0, 0, 0)
    assert cbox_to_rbox(CBox(10, 4, 5)) == RBox(5, -1, 15, 9)
    assert cbox_to_rbox(CBox(10, 4, 5), 960, 540) == RBox(5, 0, 15, 9)


def test_clip_to_frame():
    assert clip_to_frame(RBox(-5, -5, 10, 10), 960, 540) == RBox(0, 0, 10, 10)
    assert clip_to_frame(RBox(0, 0, 10, 10), 960, 540) == RBox(0, 0, 10, 10)
    with pytest.raises(EmptyRegion):
        clip_to_frame(RBox(1000, 600, 1100, 700), 960, 540)
    with pytest.raises(ValueError):
        clip_to_frame(RBox(0, 0, 1, 1), 0, 10)


def test_inverted_box_rejected():
    with pytest.raises(ValueError):
        RBox(5, 0, 4, 10)
    with pytest.raises(ValueError):
        CBox(0, 0, -1)


def test_detection_invariants():
    Detection(RBox(0, 0, 1, 1), PERSON)
    with pytest.raises(ValueError):
        Detection(CBox(0, 0, 1), PERSON)
    with pytest.raises(ValueError):
        Detection(RBox(0, 0, 1, 1), BALL)
    with pytest.raises(ValueError):
        Detection(RBox(0, 0, 1, 1), PERSON, confidence=1.5)


def test_fractional_input_floors():
    assert to_pixel(3.9) == 3
    assert to_pixel(-0.5) == -1


def test_row_round_trip():
    for box, cls in [(RBox(3, 4, 50, 90), PERSON), (CBox(100, 40, 8), BALL)]:
        assert row_to_box(box_to_row(box), cls) == box


coord = st.integers(-2000, 2000)


@st.composite
def rboxes(draw):
    x1, x2 = sorted((draw(coord), draw(coord)))
    y1, y2 = sorted((draw(coord), draw(coord)))
    return RBox(x1, y1, x2, y2)


@given(rboxes())
def test_box_contains_its_center(b):
    assert contains(b, center(b))


@given(coord, coord, st.integers(0, 500))
def test_circumscribed_square_keeps_center(cx, cy, r):
    assert center(cbox_to_rbox(CBox(cx, cy, r))) == (cx, cy)


@given(rboxes(), st.integers(1, 1500), st.integers(1, 1500))
def test_clip_idempotent(b, w, h):
    try:
        once = clip_to_frame(b, w, h)
    except EmptyRegion:
        return
    assert clip_to_frame(once, w, h) == once
    assert 0 <= once.x_left <= once.x_right <= w - 1
    assert 0 <= once.y_top <= once.y_bottom <= h - 1
