import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from catchtrack.actions import (
    CATCH,
    NONE,
    THROW,
    ActionEvent,
    Collision,
    GatedSignal,
    build_gated_signal,
    clean_signal,
    components,
    denoise,
    detect_actions,
    detect_collisions,
    dilate,
    drop_short,
    erode,
    extract_events,
    gated_signals_from_records,
    vote,
)
from catchtrack.geometry import BALL, PERSON, CBox, Detection, RBox, TaggedDetection
import oracles


def sig(labels, ball=1):
    return GatedSignal(ball, np.array(labels))


def person(pid, box, t=0):
    return TaggedDetection(Detection(RBox(*box), PERSON, 1.0, t), pid)


def ball(bid, cx, cy, t=0):
    return TaggedDetection(Detection(CBox(cx, cy, 5), BALL, 1.0, t), bid)


# ------------------------------------------------------------ collisions


def test_detect_collisions_examples():
    p = person(3, (0, 0, 40, 80))
    assert [(c.ball_id, c.person_id) for c in detect_collisions([p, ball(1, 20, 40)])] == [(1, 3)]
    assert detect_collisions([p, ball(1, 100, 40)]) == []
    both = detect_collisions([p, person(4, (30, 0, 70, 80)), ball(1, 35, 40)])
    assert sorted((c.ball_id, c.person_id) for c in both) == [(1, 3), (1, 4)]


def test_gated_signal_examples():
    assert not build_gated_signal(1, {}, 50).occupancy.any()
    hits = {t: [Collision(1, 3, 0)] for t in range(10, 21)}
    s = build_gated_signal(1, hits, 40)
    assert (s.labels[10:21] == 3).all() and s.occupancy.sum() == 11
    near = {5: [Collision(1, 5, 100), Collision(1, 2, 9), Collision(2, 7, 0)]}
    assert build_gated_signal(1, near, 10).labels[5] == 2
    tie = {5: [Collision(1, 5, 9), Collision(1, 2, 9)]}
    assert build_gated_signal(1, tie, 10).labels[5] == 2
    with pytest.raises(ValueError):
        build_gated_signal(1, {}, 0)


# ------------------------------------------------------------ morphology


def test_dilate_examples():
    s = sig([0] * 100)
    s.labels[50] = 4
    d = dilate(s, 3)
    assert np.flatnonzero(d.labels).tolist() == list(range(47, 54))
    assert dilate(s, 0) == s
    two = sig([0] * 30)
    two.labels[10:13] = 7
    two.labels[15:17] = 7
    assert np.flatnonzero(dilate(two, 2).labels).tolist() == list(range(8, 19))


def test_dilate_tie_goes_to_earlier_frame():
    s = sig([0, 2, 0, 0, 5, 0])
    # frame 2 is 1 from frame 1 and 2 from frame 4; frame 3 is 1 from frame 4
    assert dilate(s, 1).labels.tolist() == [2, 2, 2, 5, 5, 5]
    even = sig([2, 0, 5])
    assert dilate(even, 1).labels.tolist() == [2, 2, 5]


def test_vote_examples():
    assert vote(sig([1] * 9 + [2]), sig([1] * 9 + [2])).labels.tolist() == [1] * 10
    assert vote(sig([4] * 5), sig([4] * 5)).labels.tolist() == [4] * 5
    tie = sig([6, 6, 6, 2, 2, 2])
    assert vote(tie, tie).labels.tolist() == [2] * 6
    # only originally labelled frames vote
    dil = sig([3, 3, 3, 3, 3, 5])
    orig = sig([0, 0, 0, 0, 3, 5])
    assert vote(dil, orig).labels.tolist() == [3] * 6


def test_erode_examples():
    s = sig([0, 1, 1, 1, 0, 1, 0])
    assert erode(s, 0) == s
    assert erode(s, 1).labels.tolist() == [0, 0, 1, 0, 0, 0, 0]
    # frames past the ends count as occupied
    assert erode(sig([1, 1, 0]), 1).labels.tolist() == [1, 0, 0]


def test_closing_restores_single_frame():
    s = sig([0] * 40)
    s.labels[20] = 3
    r = 4
    closed = erode(vote(dilate(s, r), s), r)
    assert closed == s
    assert denoise(s, r) == s


def test_id_flip_removed():
    labels = [0] * 20 + [3] * 30 + [0] * 20
    flipped = list(labels)
    flipped[35] = 5
    assert extract_events(clean_signal(sig(flipped), 8)) == extract_events(clean_signal(sig(labels), 8))


def test_false_gap_closed():
    theta = 8
    labels = [0] * 20 + [3] * 30 + [0] * 20
    gapped = list(labels)
    gapped[30 : 30 + theta - 1] = [0] * (theta - 1)
    events = extract_events(clean_signal(sig(gapped), theta))
    assert events == [ActionEvent(CATCH, 20, 1, 3), ActionEvent(THROW, 49, 1, 3)]


def test_extract_events_examples():
    assert extract_events(sig([0] * 10)) == []
    s = sig([0] * 200)
    s.labels[30:81] = 4
    assert extract_events(s) == [ActionEvent(CATCH, 30, 1, 4), ActionEvent(THROW, 80, 1, 4)]
    s = sig([0] * 100)
    s.labels[0:41] = 2
    assert extract_events(s) == [ActionEvent(THROW, 40, 1, 2)]
    s = sig([2] * 10)
    assert extract_events(s) == []


def test_drop_short():
    s = sig([0, 1, 1, 0, 2, 2, 2, 2, 0])
    assert drop_short(s, 3).labels.tolist() == [0, 0, 0, 0, 2, 2, 2, 2, 0]
    assert drop_short(s, 0) == s


def test_components_split_on_label_change():
    comps = components(sig([1, 1, 2, 0, 2]))
    assert [(c.start, c.end, c.owner) for c in comps] == [(0, 1, 1), (2, 2, 2), (4, 4, 2)]


signals = st.lists(st.sampled_from([0, 0, 0, 1, 2, 3]), min_size=1, max_size=120)


@given(signals, st.integers(0, 6))
def test_dilate_erode_match_window_oracle(labels, r):
    s = sig(labels)
    assert dilate(s, r).labels.tolist() == oracles.dilate_labels(labels, r)
    assert erode(s, r).labels.tolist() == oracles.erode_labels(labels, r)
    d = dilate(s, r)
    assert vote(d, s).labels.tolist() == oracles.vote_labels(d.labels.tolist(), labels)


@given(signals, st.integers(0, 6))
def test_closing_fills_exactly_short_gaps(labels, r):
    s = sig(labels)
    out = denoise(s, r)
    expected = oracles.closed_occupancy(s.occupancy.tolist(), r)
    assert out.occupancy.tolist() == expected
    assert set(out.labels.tolist()) - {NONE} <= set(labels) - {NONE}


@given(signals, st.integers(0, 6))
def test_vote_conserves_labels(labels, r):
    s = sig(labels)
    d = dilate(s, r)
    v = vote(d, s)
    for c in components(v):
        assert c.owner in set(labels[c.start : c.end + 1]) | set(d.labels[c.start : c.end + 1].tolist())
        assert c.owner in labels


@st.composite
def clean_runs(draw):
    """Runs and gaps longer than the closing window, with sparse single-frame glitches."""
    r = draw(st.integers(1, 4))
    out = []
    for _ in range(draw(st.integers(1, 6))):
        out += [0] * draw(st.integers(2 * r + 2, 30))
        out += [draw(st.integers(1, 3))] * draw(st.integers(2 * r + 2, 40))
    out += [0] * draw(st.integers(0, 10))
    return out, r


@given(clean_runs())
def test_denoise_idempotent(case):
    labels, r = case
    once = denoise(sig(labels), r)
    assert denoise(once, r) == once


@given(signals, st.integers(1, 12))
def test_event_parity(labels, theta):
    cleaned = clean_signal(sig(labels), theta)
    events = extract_events(cleaned)
    # one ball: a shared frame means a one-frame part, whose catch sorts first
    kinds = [e.kind for e in events]
    for a, b in zip(kinds, kinds[1:]):
        assert a != b
    expected = [ActionEvent(*e) for e in oracles.events_from_labels(cleaned.labels.tolist(), 1)]
    assert events == sorted(expected, key=ActionEvent.sort_key)


@given(st.integers(0, 2**31))
def test_record_route_equals_collision_route(seed):
    rng = np.random.default_rng(seed)
    T, P, B = 12, 3, 2
    prow = np.full((T, P, 4), -1, dtype=np.int32)
    brow = np.full((T, B, 4), -1, dtype=np.int32)
    stream = []
    for t in range(T):
        frame = []
        for i in range(P):
            if rng.random() < 0.8:
                x, y = rng.integers(0, 60, size=2)
                box = RBox(int(x), int(y), int(x + rng.integers(5, 40)), int(y + rng.integers(5, 40)))
                prow[t, i] = tuple(box)
                frame.append(TaggedDetection(Detection(box, PERSON, 1.0, t), i + 1))
        for j in range(B):
            if rng.random() < 0.8:
                cx, cy = (int(v) for v in rng.integers(0, 100, size=2))
                c = CBox(cx, cy, 4)
                brow[t, j] = (cx - 4, cy - 4, cx + 4, cy + 4)
                frame.append(TaggedDetection(Detection(c, BALL, 1.0, t), j + 1))
        stream.append(frame)
    fast = gated_signals_from_records(prow, brow, [1, 2, 3], [1, 2])
    hits = {t: detect_collisions(f) for t, f in enumerate(stream)}
    slow = [build_gated_signal(b, hits, T) for b in (1, 2)]
    assert fast == slow


def test_detect_actions_end_to_end():
    stream = []
    for t in range(60):
        frame = [person(1, (0, 0, 40, 80), t), person(2, (200, 0, 240, 80), t)]
        if t < 20:
            frame.append(ball(1, 20, 40, t))
        elif t >= 35:
            frame.append(ball(1, 220, 40, t))
        else:
            frame.append(ball(1, 120, 10, t))
        stream.append(frame)
    assert detect_actions(stream, 60) == [ActionEvent(THROW, 19, 1, 1), ActionEvent(CATCH, 35, 1, 2)]
    assert detect_actions([], 0) == []
