import random

import pytest
from hypothesis import given, strategies as st

from catchtrack.actions import ActionEvent
from catchtrack.buffers import CostReport
from catchtrack.errors import DegenerateCost
from catchtrack.metrics import accuracy, final_score, match_events, report_lines
from oracles import accuracy_by_hand


def ev(kind, frame, ball=1, person=1):
    return ActionEvent(kind, frame, ball, person)


def test_perfect():
    gt = [ev("catch", 10), ev("throw", 40), ev("catch", 80, 2, 3)]
    m = match_events(gt, gt)
    assert (m.tp, m.fp, m.fn) == (3, 0, 0)
    assert accuracy(m) == 1.0


def test_wrong_person_is_half():
    m = match_events([ev("catch", 10, person=2)], [ev("catch", 10, person=1)])
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)
    assert len(m.partial) == 1 and m.pairs == []
    assert accuracy(m) == 0.5


def test_two_of_three():
    pred = [ev("catch", 10), ev("throw", 40), ev("catch", 200)]
    gt = [ev("catch", 10), ev("throw", 40), ev("catch", 100)]
    m = match_events(pred, gt)
    assert (m.tp, m.fp, m.fn) == (2, 1, 1)
    assert accuracy(m) == pytest.approx(2 / 3)
    assert f"{accuracy(m):.4f}" == "0.6667"


def test_tolerance_boundary():
    gt = [ev("catch", 100)]
    m = match_events([ev("catch", 111)], gt)
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)
    m = match_events([ev("catch", 110)], gt)
    assert m.tp == 1
    m = match_events([ev("catch", 90)], gt)
    assert m.tp == 1


def test_kind_and_ball_must_agree():
    m = match_events([ev("throw", 10), ev("catch", 10, ball=2)], [ev("catch", 10)])
    assert (m.tp, m.fp, m.fn) == (0, 2, 1)
    assert accuracy(m) == 0.0


def test_empty_inputs():
    assert accuracy(match_events([], [])) == 1.0
    assert accuracy(match_events([], [ev("catch", 5)])) == 0.0
    with pytest.raises(ValueError):
        match_events([], [], tol=-1)
    with pytest.raises(ValueError):
        match_events([], [], mode="fancy")


def test_greedy_prefers_nearest():
    pred = [ev("catch", 5), ev("catch", 12)]
    gt = [ev("catch", 11)]
    m = match_events(pred, gt)
    assert m.pairs[0][0].frame == 12


def test_score():
    s = final_score(1.0, 2.0)
    assert s.score == 0.5
    assert final_score(0.8, 1.0).score == 2 * final_score(0.8, 2.0).score
    rep = CostReport()
    rep.write("decode", 100)
    rep.invoke("decode", 4)
    assert final_score(1.0, rep, alpha=25).energy_proxy == 200
    with pytest.raises(DegenerateCost):
        final_score(1.0, 0.0)
    with pytest.raises(DegenerateCost):
        final_score(1.0, CostReport())


def test_report_lines():
    m = match_events([ev("catch", 10)], [ev("catch", 10)])
    lines = report_lines(m, 10, final_score(1.0, 4.0))
    assert lines[:3] == ["tol=10", "pred=1", "gt=1"]
    assert "accuracy=1.000000" in lines and "score=0.25" in lines


@st.composite
def event_sets(draw):
    def one():
        return ActionEvent(
            draw(st.sampled_from(["catch", "throw"])),
            draw(st.integers(0, 120)),
            draw(st.integers(1, 2)),
            draw(st.integers(1, 3)),
        )

    pred = [one() for _ in range(draw(st.integers(0, 8)))]
    gt = [one() for _ in range(draw(st.integers(0, 8)))]
    return pred, gt


@given(event_sets(), st.sampled_from(["greedy", "optimal"]))
def test_tolerance_monotone(sets, mode):
    pred, gt = sets
    accs = [accuracy(match_events(pred, gt, tol, mode)) for tol in range(0, 21)]
    assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))


@given(event_sets(), st.sampled_from(["greedy", "optimal"]), st.randoms())
def test_permutation_invariant_and_bounded(sets, mode, rnd):
    pred, gt = sets
    m = match_events(pred, gt, 10, mode)
    a = accuracy(m)
    assert 0.0 <= a <= 1.0
    assert m.tp == len(m.pairs)
    p2, g2 = list(pred), list(gt)
    rnd.shuffle(p2)
    rnd.shuffle(g2)
    assert accuracy(match_events(p2, g2, 10, mode)) == a
    assert a == pytest.approx(accuracy_by_hand(len(pred), len(gt), len(m.pairs), len(m.partial)))
    # one pred and one gt per pair at most
    assert len({id(p) for p, _ in m.matched}) == len(m.matched)
    assert len({id(g) for _, g in m.matched}) == len(m.matched)


@given(event_sets())
def test_optimal_never_worse_than_greedy(sets):
    pred, gt = sets
    assert accuracy(match_events(pred, gt, 10, "optimal")) >= accuracy(match_events(pred, gt, 10, "greedy")) - 1e-12


def test_symmetric_perfection():
    rng = random.Random(0)
    for _ in range(50):
        gt = [ev(rng.choice(["catch", "throw"]), rng.randrange(500), rng.randint(1, 4), rng.randint(1, 7)) for _ in range(10)]
        assert accuracy(match_events(gt, gt)) == 1.0
