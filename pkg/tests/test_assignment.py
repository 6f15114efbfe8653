import math

import numpy as np
from hypothesis import given, strategies as st

from catchtrack.assignment import INFEASIBLE, matching_cost, solve_assignment
from oracles import brute_assignment


def _check(cost, pairs):
    c = np.asarray(cost, dtype=float)
    rows = [i for i, _ in pairs]
    cols = [j for _, j in pairs]
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert all(math.isfinite(c[i, j]) for i, j in pairs)


def test_examples():
    assert solve_assignment([[0, 1], [1, 0]]) == [(0, 0), (1, 1)]
    assert solve_assignment([[0.1, INFEASIBLE], [INFEASIBLE, 0.2]]) == [(0, 0), (1, 1)]


def test_degenerate_inputs():
    assert solve_assignment(np.zeros((0, 3))) == []
    assert solve_assignment(np.full((3, 2), INFEASIBLE)) == []


def test_cardinality_beats_cost():
    # the cheap entry (0,0) would block the only two-pair matching
    c = [[0.0, 5.0], [1.0, INFEASIBLE]]
    assert solve_assignment(c) == [(0, 1), (1, 0)]


def test_rectangular():
    c = [[0.5, 0.1, 0.9]]
    assert solve_assignment(c) == [(0, 1)]
    assert solve_assignment(np.array(c).T) == [(1, 0)]


def test_six_by_six_against_permutations():
    rng = np.random.default_rng(3)
    for _ in range(20):
        c = rng.random((6, 6))
        pairs = solve_assignment(c)
        assert len(pairs) == 6
        assert abs(matching_cost(c, pairs) - brute_assignment(c)[1]) < 1e-9


@st.composite
def matrices(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(1, 6))
    vals = draw(st.lists(st.floats(-50, 50, allow_nan=False), min_size=n * m, max_size=n * m))
    mask = draw(st.lists(st.booleans(), min_size=n * m, max_size=n * m))
    c = np.array(vals).reshape(n, m)
    c[np.array(mask).reshape(n, m)] = INFEASIBLE
    return c


@given(matrices())
def test_matches_brute_force(c):
    pairs = solve_assignment(c)
    _check(c, pairs)
    card, total = brute_assignment(c)
    assert len(pairs) == card
    assert abs(matching_cost(c, pairs) - total) < 1e-9


@given(matrices(), st.floats(0.01, 100))
def test_scale_invariance(c, lam):
    base = solve_assignment(c)
    scaled = solve_assignment(c * lam)
    # the optimal value scales; the chosen matching stays optimal for the original
    assert len(base) == len(scaled)
    assert abs(matching_cost(c, scaled) - matching_cost(c, base)) < 1e-7 * (1 + abs(matching_cost(c, base)))


@given(st.permutations(range(5)), st.lists(st.floats(0, 1), min_size=5, max_size=5))
def test_forced_matching(perm, vals):
    c = np.full((5, 5), INFEASIBLE)
    for i, j in enumerate(perm):
        c[i, j] = vals[i]
    assert solve_assignment(c) == [(i, j) for i, j in enumerate(perm)]
