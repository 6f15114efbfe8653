"""Learning-free catch/throw localisation from box trajectories.

Each ball gets a gated signal: per frame, the id of the person whose box
contains the ball's center, or ``NONE``. The signal is closed (dilated,
majority-voted per connected part, eroded) with radius ``theta // 2`` so
that short detection/association glitches disappear, and the start and end
of every remaining part are the catch and throw frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .geometry import BALL, PERSON, TaggedDetection, center, contains

NONE = 0
CATCH = "catch"
THROW = "throw"
_KIND_RANK = {CATCH: 0, THROW: 1}

DEFAULT_THETA = 8


@dataclass(frozen=True, slots=True)
class ActionEvent:
    kind: str
    frame: int
    ball_id: int
    person_id: int

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def sort_key(self):
        return (self.frame, self.ball_id, _KIND_RANK[self.kind], self.person_id)

    def to_line(self) -> str:
        return f"{self.kind},{self.frame},{self.ball_id},{self.person_id}"


def sort_events(events: Iterable[ActionEvent]) -> List[ActionEvent]:
    return sorted(events, key=ActionEvent.sort_key)


@dataclass
class GatedSignal:
    ball_id: int
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")

    @property
    def T(self) -> int:
        return self.labels.shape[0]

    @property
    def occupancy(self) -> np.ndarray:
        return self.labels != NONE

    def __eq__(self, other):
        return (
            isinstance(other, GatedSignal)
            and self.ball_id == other.ball_id
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, slots=True)
class PossessionComponent:
    start: int
    end: int
    owner: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


class Collision(NamedTuple):
    ball_id: int
    person_id: int
    dist2: int  # squared distance between ball center and person-box center


def detect_collisions(frame: Sequence[TaggedDetection]) -> List[Collision]:
    """Every (ball, person) pair whose person box contains the ball center."""
    persons = [d for d in frame if d.cls == PERSON]
    out = []
    for ball in frame:
        if ball.cls != BALL:
            continue
        bx, by = center(ball.box)
        for p in persons:
            if contains(p.box, (bx, by)):
                px, py = center(p.box)
                out.append(Collision(ball.identity, p.identity, (bx - px) ** 2 + (by - py) ** 2))
    return out


def build_gated_signal(
    ball_id: int,
    collisions: Mapping[int, Sequence[Collision]] | Sequence[Sequence[Collision]],
    T: int,
) -> GatedSignal:
    """Per-frame possession labels for one ball.

    ``collisions`` maps frame index to that frame's collisions (any ball);
    several persons at one frame resolve to the nearest box center, then the
    smaller person id.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    labels = np.full(T, NONE, dtype=np.int64)
    items = collisions.items() if isinstance(collisions, Mapping) else enumerate(collisions)
    for t, frame_hits in items:
        best = None
        for c in frame_hits:
            if c.ball_id != ball_id:
                continue
            key = (c.dist2, c.person_id)
            if best is None or key < best:
                best = key
        if best is not None and 0 <= t < T:
            labels[t] = best[1]
    return GatedSignal(ball_id, labels)


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Inclusive (start, end) of each maximal run of True."""
    if mask.size == 0:
        return []
    m = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(m)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def dilate(signal: GatedSignal, r: int) -> GatedSignal:
    """Grow the occupancy by ``r`` frames each side.

    A newly covered frame copies the label of the nearest originally
    labelled frame, the earlier one on a tie.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    labels = signal.labels
    T = labels.shape[0]
    idx = np.flatnonzero(labels != NONE)
    if r == 0 or idx.size == 0:
        return GatedSignal(signal.ball_id, labels.copy())
    t = np.arange(T)
    nxt_pos = np.searchsorted(idx, t, side="left")  # first labelled >= t
    prev_pos = nxt_pos - 1
    big = T + r + 1
    has_prev = prev_pos >= 0
    has_next = nxt_pos < idx.size
    prev_t = np.where(has_prev, idx[np.clip(prev_pos, 0, idx.size - 1)], -big)
    next_t = np.where(has_next, idx[np.clip(nxt_pos, 0, idx.size - 1)], 2 * big)
    d_prev = t - prev_t
    d_next = next_t - t
    src = np.where(d_prev <= d_next, prev_t, next_t)
    covered = np.minimum(d_prev, d_next) <= r
    out = np.where(covered, labels[np.clip(src, 0, T - 1)], NONE)
    return GatedSignal(signal.ball_id, out)


def erode(signal: GatedSignal, r: int) -> GatedSignal:
    """Shrink the occupancy by ``r`` frames each side.

    Frames beyond either end count as occupied, so erosion only bites at
    interior gaps; surviving frames keep their labels.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    labels = signal.labels
    T = labels.shape[0]
    if r == 0 or T == 0:
        return GatedSignal(signal.ball_id, labels.copy())
    empty = np.concatenate(([0], np.cumsum(labels == NONE)))
    t = np.arange(T)
    lo = np.clip(t - r, 0, T)
    hi = np.clip(t + r + 1, 0, T)
    survives = (empty[hi] - empty[lo]) == 0
    return GatedSignal(signal.ball_id, np.where(survives, labels, NONE))


def components(signal: GatedSignal) -> List[PossessionComponent]:
    """Maximal runs of a single non-NONE label."""
    labels = signal.labels
    out = []
    for s, e in _runs(labels != NONE):
        seg = labels[s : e + 1]
        cuts = np.flatnonzero(np.diff(seg)) + 1
        bounds = [0, *cuts.tolist(), seg.size]
        for a, b in zip(bounds[:-1], bounds[1:]):
            out.append(PossessionComponent(s + a, s + b - 1, int(seg[a])))
    return out


def vote(dilated: GatedSignal, original: GatedSignal) -> GatedSignal:
    """Relabel each connected part with its majority owner.

    Only originally labelled frames vote; ties go to the smaller person id.
    """
    out = dilated.labels.copy()
    orig = original.labels
    for s, e in _runs(out != NONE):
        votes = orig[s : e + 1]
        votes = votes[votes != NONE]
        if votes.size == 0:
            continue
        ids, counts = np.unique(votes, return_counts=True)
        out[s : e + 1] = ids[np.argmax(counts)]  # unique sorts ids, argmax takes first max
    return GatedSignal(dilated.ball_id, out)


def denoise(signal: GatedSignal, r: int) -> GatedSignal:
    """Dilate, vote, erode, with the signal embedded in an all-NONE line.

    Padding by ``r`` on each side keeps the closing exact at the video
    boundaries: only interior gaps of length <= 2r are filled.
    """
    if r == 0:
        return vote(signal, signal)
    padded = GatedSignal(signal.ball_id, np.pad(signal.labels, r, constant_values=NONE))
    closed = erode(vote(dilate(padded, r), padded), r)
    return GatedSignal(signal.ball_id, closed.labels[r:-r])


def drop_short(signal: GatedSignal, min_length: int) -> GatedSignal:
    labels = signal.labels.copy()
    if min_length > 1:
        for s, e in _runs(labels != NONE):
            if e - s + 1 < min_length:
                labels[s : e + 1] = NONE
    return GatedSignal(signal.ball_id, labels)


def extract_events(signal: GatedSignal) -> List[ActionEvent]:
    """Catch at each part's start, throw at its end.

    A part touching frame 0 emits no catch and one touching ``T-1`` emits
    no throw: the ball may have been held before or after the video.
    """
    T = signal.T
    events = []
    for comp in components(signal):
        if comp.start != 0:
            events.append(ActionEvent(CATCH, comp.start, signal.ball_id, comp.owner))
        if comp.end != T - 1:
            events.append(ActionEvent(THROW, comp.end, signal.ball_id, comp.owner))
    return sort_events(events)


def clean_signal(
    signal: GatedSignal, theta: int = DEFAULT_THETA, min_possession: Optional[int] = None
) -> GatedSignal:
    """Full denoising chain; ``min_possession`` defaults to ``theta`` (0 disables)."""
    if min_possession is None:
        min_possession = theta
    return drop_short(denoise(signal, theta // 2), min_possession)


def detect_actions_from_signals(
    signals: Iterable[GatedSignal], theta: int = DEFAULT_THETA, min_possession: Optional[int] = None
) -> List[ActionEvent]:
    events = []
    for s in signals:
        events.extend(extract_events(clean_signal(s, theta, min_possession)))
    return sort_events(events)


def detect_actions(
    stream: Sequence[Sequence[TaggedDetection]],
    T: int,
    theta: int = DEFAULT_THETA,
    min_possession: Optional[int] = None,
    ball_ids: Optional[Iterable[int]] = None,
) -> List[ActionEvent]:
    """Catch/throw events from a tagged detection stream indexed by frame."""
    if T <= 0:
        return []
    hits: Dict[int, List[Collision]] = {}
    seen = set(ball_ids or ())
    for t, frame in enumerate(stream):
        for d in frame:
            if d.cls == BALL:
                seen.add(d.identity)
        found = detect_collisions(frame)
        if found:
            hits[t] = found
    signals = [build_gated_signal(b, hits, T) for b in sorted(seen)]
    return detect_actions_from_signals(signals, theta, min_possession)


def gated_signals_from_records(
    person_rows: np.ndarray, ball_rows: np.ndarray, person_ids: Sequence[int], ball_ids: Sequence[int]
) -> List[GatedSignal]:
    """Vectorised gated signals from box records.

    ``person_rows`` is (T, P, 4) and ``ball_rows`` (T, B, 4) of inclusive
    corners, absent entries all ``-1``. Same predicate and tie rules as
    :func:`detect_collisions` + :func:`build_gated_signal`.
    """
    T = person_rows.shape[0]
    pid = np.asarray(person_ids, dtype=np.int64)
    present_p = ~np.all(person_rows == -1, axis=2)  # (T, P)
    pcx = (person_rows[..., 0] + person_rows[..., 2]) // 2
    pcy = (person_rows[..., 1] + person_rows[..., 3]) // 2
    out = []
    for j, b in enumerate(ball_ids):
        rows = ball_rows[:, j, :]
        present_b = ~np.all(rows == -1, axis=1)
        bx = ((rows[:, 0] + rows[:, 2]) // 2)[:, None]
        by = ((rows[:, 1] + rows[:, 3]) // 2)[:, None]
        inside = (
            present_p
            & present_b[:, None]
            & (person_rows[..., 0] <= bx)
            & (bx <= person_rows[..., 2])
            & (person_rows[..., 1] <= by)
            & (by <= person_rows[..., 3])
        )
        labels = np.full(T, NONE, dtype=np.int64)
        if pid.size:
            d2 = (bx - pcx) ** 2 + (by - pcy) ** 2
            # nearest center first, then smaller id
            key = np.where(inside, d2 * (pid.max() + 1) + pid[None, :], np.iinfo(np.int64).max)
            best = np.argmin(key, axis=1)
            hit = inside.any(axis=1)
            labels[hit] = pid[best[hit]]
        out.append(GatedSignal(int(b), labels))
    return out
