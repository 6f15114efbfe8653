"""Synthetic ball-toss scenarios with ground truth and seeded noise.

Persons random-walk inside disjoint grid cells, so their boxes never
overlap. Each ball alternates between being held (center pinned to the
holder's box center) and flying on a low parabola to another person. Flight
paths are rejection-sampled so that a flying ball's center never enters a
person box; the geometric collision signal of a clean stream therefore
equals the planned possession signal frame for frame.

Every random choice comes from a named substream of one seed, so noise
channels can be varied independently.
"""

from __future__ import annotations

import functools

import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .actions import NONE, ActionEvent, GatedSignal, extract_events
from .association import DEFAULT_DIM, FeatureVector
from .errors import LayoutError, UnknownIdentity
from .geometry import BALL, PERSON, CBox, Detection, RBox, bounding_rbox, center, contains
from .scenario import Scenario

PRESETS: Dict[str, Tuple[int, int]] = {
    "7p3b": (7, 3),
    "5p5b": (5, 5),
    "5p4b": (5, 4),
    "5p2b": (5, 2),
    "4p1b": (4, 1),
}

_PRESET_RE = re.compile(r"^(\d+)p(\d+)b$")

_STREAMS = {
    "persons": 1,
    "balls": 2,
    "fp": 11,
    "fn": 12,
    "jitter": 13,
    "feature": 14,
    "swap": 15,
}


def preset_counts(name: str) -> Tuple[int, int]:
    """``"7p3b"`` -> ``(7, 3)``; any ``<P>p<B>b`` name is accepted."""
    m = _PRESET_RE.match(name.strip().lower())
    if not m:
        raise ValueError(f"bad preset name {name!r} (expected e.g. 5p4b)")
    return int(m.group(1)), int(m.group(2))


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) % 2**64, _STREAMS[name]]))


@dataclass(frozen=True)
class NoiseSpec:
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    jitter_px: int = 0
    feature_noise: float = 0.0
    id_confusion: float = 0.0
    fp_max_life: Optional[int] = None  # default theta - 1
    confine_to_possession: bool = False

    def __post_init__(self):
        for name in ("fp_rate", "fn_rate", "id_confusion"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.jitter_px < 0 or self.feature_noise < 0:
            raise ValueError("noise amplitudes must be non-negative")
        if self.fp_max_life is not None and self.fp_max_life < 1:
            raise ValueError("fp_max_life must be >= 1")

    @property
    def is_zero(self) -> bool:
        return (
            self.fp_rate == 0
            and self.fn_rate == 0
            and self.jitter_px == 0
            and self.feature_noise == 0
            and self.id_confusion == 0
        )


@dataclass(frozen=True)
class ScenarioSpec:
    persons: int
    balls: int
    frames: int
    width: int = 960
    height: int = 540
    theta: int = 8
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    person_width: int = 40  # boxes are 2:1 height:width
    ball_radius: int = 8  # crop side 64 / 8
    max_speed: int = 2
    hold_range: Tuple[int, int] = (20, 60)
    flight_range: Tuple[int, int] = (12, 40)
    arc_height: int = 24

    def __post_init__(self):
        if self.persons < 1:
            raise ValueError("need at least one person")
        if self.balls < 0:
            raise ValueError("ball count must be non-negative")
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if self.theta < 1:
            raise ValueError("theta must be >= 1")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dims must be positive")
        if self.hold_range[0] > self.hold_range[1] or self.flight_range[0] > self.flight_range[1]:
            raise ValueError("empty hold/flight range")

    @classmethod
    def preset(cls, name: str, **kw) -> "ScenarioSpec":
        p, b = preset_counts(name)
        return cls(p, b, **kw)

    @property
    def min_hold(self) -> int:
        return max(self.hold_range[0], self.theta)

    @property
    def min_flight(self) -> int:
        # strictly more than theta empty frames: closing fills gaps <= 2*(theta//2)
        return max(self.flight_range[0], self.theta + 1)


@dataclass
class GroundTruth:
    person_boxes: np.ndarray  # (T, P, 4) inclusive corners
    ball_circles: np.ndarray  # (T, B, 3) cx, cy, r
    events: List[ActionEvent]
    possession: List[GatedSignal]

    @property
    def T(self) -> int:
        return self.person_boxes.shape[0]

    @property
    def persons(self) -> int:
        return self.person_boxes.shape[1]

    @property
    def balls(self) -> int:
        return self.ball_circles.shape[1]

    def interior(self, cls: str, identity: int, t: int) -> bool:
        """True if the actor is inside (not at an end of) a possession run at ``t``."""
        if not 0 < t < self.T - 1:
            return False
        if cls == BALL:
            if not 1 <= identity <= len(self.possession):
                return False
            lab = self.possession[identity - 1].labels
            return lab[t] != NONE and lab[t - 1] == lab[t] == lab[t + 1]
        for sig in self.possession:
            lab = sig.labels
            if lab[t] == identity and lab[t - 1] == identity and lab[t + 1] == identity:
                return True
        return False


# ---------------------------------------------------------------- layout


def _grid(p: int, width: int, height: int) -> Tuple[int, int]:
    rows = 1 if p <= 3 else 2 if p <= 8 else 3
    cols = math.ceil(p / rows)
    while cols * rows < p:
        cols += 1
    return rows, cols


def _person_tracks(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    P, T = spec.persons, spec.frames
    pw = spec.person_width
    ph = 2 * pw
    rows, cols = _grid(P, spec.width, spec.height)
    cw, ch = spec.width // cols, spec.height // rows
    side_pad = 4
    top_pad = 2 * spec.ball_radius + 8  # room for the launch point above the box
    bottom_pad = 4
    if cw < pw + 2 * side_pad or ch < ph + top_pad + bottom_pad:
        raise LayoutError(
            f"{P} persons of {pw}x{ph} px do not fit a {spec.width}x{spec.height} frame"
        )
    boxes = np.zeros((T, P, 4), dtype=np.int64)
    vmax = spec.max_speed
    for i in range(P):
        r, c = divmod(i, cols)
        xmin = c * cw + side_pad
        xmax = (c + 1) * cw - side_pad - pw
        ymin = r * ch + top_pad
        ymax = (r + 1) * ch - bottom_pad - ph
        x = int(rng.integers(xmin, xmax + 1))
        y = int(rng.integers(ymin, ymax + 1))
        vx, vy = (int(v) for v in rng.integers(-vmax, vmax + 1, size=2))
        turns = rng.random(T)
        newv = rng.integers(-vmax, vmax + 1, size=(T, 2))
        for t in range(T):
            boxes[t, i] = (x, y, x + pw - 1, y + ph - 1)
            if turns[t] < 0.1:
                vx, vy = int(newv[t, 0]), int(newv[t, 1])
            if not xmin <= x + vx <= xmax:
                vx = -vx
            if not ymin <= y + vy <= ymax:
                vy = -vy
            x = min(max(x + vx, xmin), xmax)
            y = min(max(y + vy, ymin), ymax)
    return boxes


def _box_center(row) -> Tuple[int, int]:
    return (int(row[0]) + int(row[2])) // 2, (int(row[1]) + int(row[3])) // 2


def _flight_path(spec, persons, thrower, receiver, throw, catch) -> Optional[List[Tuple[int, int]]]:
    """Ball centers for frames throw+1 .. catch-1, or None if the path hits a person."""
    r = spec.ball_radius
    lift = r + 2 * spec.max_speed + 4
    a, b = persons[throw, thrower], persons[catch, receiver]
    x0, y0 = (int(a[0]) + int(a[2])) // 2, int(a[1]) - lift
    x1, y1 = (int(b[0]) + int(b[2])) // 2, int(b[1]) - lift
    h = max(0, min(spec.arc_height, min(y0, y1) - r))
    span = catch - throw
    path = []
    for f in range(throw + 1, catch):
        s = (f - throw) / span
        x = math.floor(x0 + s * (x1 - x0))
        y = math.floor(y0 + s * (y1 - y0) - 4 * h * s * (1 - s))
        if not (r <= x <= spec.width - 1 - r and r <= y <= spec.height - 1 - r):
            return None
        for row in persons[f]:
            if row[0] <= x <= row[2] and row[1] <= y <= row[3]:
                return None
        path.append((x, y))
    return path


def _plan_ball(spec, persons, rng) -> Tuple[np.ndarray, np.ndarray]:
    """Possession labels (T,) and centers (T, 2) for one ball."""
    T, P = spec.frames, spec.persons
    labels = np.full(T, NONE, dtype=np.int64)
    centers = np.zeros((T, 2), dtype=np.int64)
    holder = int(rng.integers(0, P))
    t = 0
    lo_h, hi_h = spec.min_hold, max(spec.min_hold, spec.hold_range[1])
    lo_f, hi_f = spec.min_flight, max(spec.min_flight, spec.flight_range[1])

    def hold(start, end, who):
        for f in range(start, end + 1):
            labels[f] = who + 1
            centers[f] = _box_center(persons[f, who])

    while t < T:
        hold_len = int(rng.integers(lo_h, hi_h + 1))
        planned = None
        while planned is None:
            throw = t + hold_len - 1
            if P < 2 or throw + lo_f + lo_h >= T:
                break
            for _ in range(8):
                receiver = int(rng.integers(0, P - 1))
                receiver += receiver >= holder
                flight = int(rng.integers(lo_f, hi_f + 1))
                catch = throw + flight + 1
                if catch + lo_h - 1 > T - 1:
                    continue
                path = _flight_path(spec, persons, holder, receiver, throw, catch)
                if path is not None:
                    planned = (throw, catch, receiver, path)
                    break
            else:
                hold_len += 5  # wait for a clear lane
        if planned is None:
            hold(t, T - 1, holder)
            break
        throw, catch, receiver, path = planned
        hold(t, throw, holder)
        centers[throw + 1 : catch] = path
        holder, t = receiver, catch
    return labels, centers


def generate(spec: ScenarioSpec) -> Tuple[GroundTruth, List[List[Detection]]]:
    """Ground truth plus the clean (noise-free) detection stream."""
    persons = _person_tracks(spec, substream(spec.seed, "persons"))
    rng_b = substream(spec.seed, "balls")
    T, B = spec.frames, spec.balls
    circles = np.zeros((T, B, 3), dtype=np.int64)
    possession = []
    for j in range(B):
        labels, centers = _plan_ball(spec, persons, rng_b)
        circles[:, j, :2] = centers
        circles[:, j, 2] = spec.ball_radius
        possession.append(GatedSignal(j + 1, labels))
    events = []
    for sig in possession:
        events.extend(extract_events(sig))
    events.sort(key=ActionEvent.sort_key)
    truth = GroundTruth(persons, circles, events, possession)
    return truth, clean_stream(truth)


def clean_stream(truth: GroundTruth) -> List[List[Detection]]:
    stream = []
    # tolist() yields Python ints in one pass instead of per-element casts
    person_rows, ball_rows = truth.person_boxes.tolist(), truth.ball_circles.tolist()
    for t in range(truth.T):
        frame = [Detection(RBox(*row), PERSON, 1.0, t, i + 1) for i, row in enumerate(person_rows[t])]
        frame += [Detection(CBox(*row), BALL, 1.0, t, j + 1) for j, row in enumerate(ball_rows[t])]
        stream.append(frame)
    return stream


# ---------------------------------------------------------------- features


def basis_index(cls: str, identity: int, persons: int, balls: int, dim: int = DEFAULT_DIM) -> int:
    if persons + balls > dim:
        raise ValueError(f"{persons + balls} identities need dim >= {persons + balls}")
    limit = persons if cls == PERSON else balls
    if not 1 <= identity <= limit:
        raise UnknownIdentity(f"{cls} {identity} not in 1..{limit}")
    return identity - 1 if cls == PERSON else dim - identity


def oracle_features(
    identity: int,
    noise: float = 0.0,
    seed: int = 0,
    t: int = 0,
    *,
    cls: str = PERSON,
    persons: int,
    balls: int,
    dim: int = DEFAULT_DIM,
) -> FeatureVector:
    """Per-identity unit basis vector plus uniform noise in [-noise, noise], renormalised."""
    v = np.zeros(dim)
    v[basis_index(cls, identity, persons, balls, dim)] = 1.0
    if noise > 0:
        rng = np.random.default_rng([int(seed) % 2**64, 0 if cls == PERSON else 1, identity, t])
        v += rng.uniform(-noise, noise, size=dim)
    n = np.linalg.norm(v)
    return FeatureVector(v / n)


def random_feature(rng: np.random.Generator, dim: int = DEFAULT_DIM) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- noise


def corrupt(
    stream: Sequence[Sequence[Detection]],
    noise: NoiseSpec,
    seed: int,
    *,
    truth: Optional[GroundTruth] = None,
    persons: Optional[int] = None,
    balls: Optional[int] = None,
    width: int = 960,
    height: int = 540,
    theta: int = 8,
    dim: int = DEFAULT_DIM,
) -> List[List[Detection]]:
    """Apply the detector/association failure models to a detection stream.

    Channels: missed detections, coordinate jitter, per-detection feature
    noise, pairwise feature swaps within a class, and spurious short-lived
    ball blips with no identity. Each channel draws from its own substream
    and draws the same number of values whatever the other channels do.
    With ``noise.confine_to_possession`` misses and swaps only hit actors
    in the interior of a possession run (requires ``truth``).
    """
    if noise.is_zero:
        return [list(frame) for frame in stream]
    if noise.confine_to_possession and truth is None:
        raise ValueError("confine_to_possession needs the ground truth")
    if truth is not None:
        persons, balls = truth.persons, truth.balls
    else:
        hints = [(d.cls, d.id_hint) for f in stream for d in f if d.id_hint is not None]
        persons = persons or max([i for c, i in hints if c == PERSON], default=0)
        balls = balls or max([i for c, i in hints if c == BALL], default=0)

    rng_fn = substream(seed, "fn")
    rng_jit = substream(seed, "jitter")
    rng_feat = substream(seed, "feature")
    rng_swap = substream(seed, "swap")
    rng_fp = substream(seed, "fp")
    a = int(noise.jitter_px)
    confine = noise.confine_to_possession

    def eligible(d: Detection) -> bool:
        return not confine or (d.id_hint is not None and truth.interior(d.cls, d.id_hint, d.frame))

    out: List[List[Detection]] = []
    for t, frame in enumerate(stream):
        kept: List[Detection] = []
        for d in frame:
            u = rng_fn.random()
            offs = rng_jit.integers(-a, a + 1, size=4)
            if u < noise.fn_rate and eligible(d):
                continue
            box = d.box
            if a:
                box = _jitter(box, offs, width, height)
            feature = d.feature
            if noise.feature_noise > 0 and d.id_hint is not None:
                try:
                    feature = oracle_features(
                        d.id_hint, noise.feature_noise, seed, t,
                        cls=d.cls, persons=persons, balls=balls, dim=dim,
                    ).values
                except UnknownIdentity:
                    pass
            kept.append(Detection(box, d.cls, d.confidence, d.frame, d.id_hint, feature))
        for cls in (PERSON, BALL):
            u, pick_a, pick_b = rng_swap.random(), rng_swap.random(), rng_swap.random()
            if u >= noise.id_confusion:
                continue
            members = [k for k, d in enumerate(kept) if d.cls == cls and d.id_hint is not None]
            first = [k for k in members if eligible(kept[k])]
            if len(members) < 2 or not first:
                continue
            i = first[int(pick_a * len(first))]
            others = [k for k in members if k != i]
            j = others[int(pick_b * len(others))]
            di, dj = kept[i], kept[j]
            kept[i] = Detection(di.box, cls, di.confidence, t, dj.id_hint, dj.feature)
            kept[j] = Detection(dj.box, cls, dj.confidence, t, di.id_hint, di.feature)
        out.append(kept)

    max_life = noise.fp_max_life or max(1, theta - 1)
    T = len(stream)
    for t in range(T):
        u = rng_fp.random()
        life = int(rng_fp.integers(1, max_life + 1))
        r = int(rng_fp.integers(4, 12))
        cx = int(rng_fp.integers(r, max(r + 1, width - r)))
        cy = int(rng_fp.integers(r, max(r + 1, height - r)))
        conf = float(np.round(rng_fp.uniform(0.3, 0.9), 3))
        feat = random_feature(rng_fp, dim)
        if u >= noise.fp_rate:
            continue
        for f in range(t, min(T, t + life)):
            out[f].append(Detection(CBox(cx, cy, r), BALL, conf, f, None, feat))
    return out


def _jitter(box, offs, width, height):
    o = [int(v) for v in offs]
    if isinstance(box, CBox):
        cx = min(max(box.cx + o[0], 0), width - 1)
        cy = min(max(box.cy + o[1], 0), height - 1)
        return CBox(cx, cy, max(0, box.radius + o[2]))
    x1, x2 = sorted((box.x_left + o[0], box.x_right + o[2]))
    y1, y2 = sorted((box.y_top + o[1], box.y_bottom + o[3]))
    x1, x2 = min(max(x1, 0), width - 1), min(max(x2, 0), width - 1)
    y1, y2 = min(max(y1, 0), height - 1), min(max(y2, 0), height - 1)
    return RBox(x1, y1, x2, y2)


# ---------------------------------------------------------------- scenarios


def simulate(spec: ScenarioSpec) -> Tuple[Scenario, GroundTruth]:
    """Generate, corrupt with ``spec.noise`` and package as a :class:`Scenario`."""
    truth, stream = generate(spec)
    stream = corrupt(
        stream, spec.noise, spec.seed, truth=truth,
        width=spec.width, height=spec.height, theta=spec.theta,
    )
    scen = Scenario(
        spec.persons, spec.balls, spec.frames, spec.width, spec.height,
        [list(f) for f in stream], list(truth.events), spec.theta,
    )
    return scen, truth


def possession_from_events(events: Sequence[ActionEvent], balls: int, T: int) -> List[GatedSignal]:
    """Rebuild clean possession signals from a ground-truth event list.

    Inverse of :func:`extract_events` for well-formed lists (a leading throw
    means the ball was held from frame 0; a trailing catch, held to the end).
    """
    out = []
    for b in range(1, balls + 1):
        labels = np.full(T, NONE, dtype=np.int64)
        start, owner = 0, None
        mine = sorted((e for e in events if e.ball_id == b), key=ActionEvent.sort_key)
        for e in mine:
            if e.kind == "catch":
                start, owner = e.frame, e.person_id
            else:
                labels[start : e.frame + 1] = e.person_id
                owner = None
                start = None
        if owner is not None and start is not None:
            labels[start:] = owner
        out.append(GatedSignal(b, labels))
    return out


def truth_from_scenario(scen: Scenario) -> GroundTruth:
    """Best-effort ground truth (possession only) for a parsed scenario file."""
    T = scen.T
    person_boxes = np.full((T, scen.persons, 4), -1, dtype=np.int64)
    circles = np.full((T, scen.balls, 3), -1, dtype=np.int64)
    return GroundTruth(
        person_boxes, circles, list(scen.events), possession_from_events(scen.events, scen.balls, T)
    )


# ---------------------------------------------------------------- rendering

_LEVELS = (32, 96, 160, 224)
BACKGROUND = (96, 96, 96)
PATCH = (224, 224, 224)  # colour of spurious blips
_PALETTE = [
    (r, g, b)
    for r in _LEVELS
    for g in _LEVELS
    for b in _LEVELS
    if (r, g, b) not in (BACKGROUND, PATCH)
]


def identity_color(cls: str, identity: Optional[int]) -> Tuple[int, int, int]:
    if identity is None:
        return PATCH
    n = len(_PALETTE)
    if cls == PERSON:
        return _PALETTE[(identity - 1) % n]
    return _PALETTE[(n - identity) % n]


_TILES: Dict[Tuple[int, int, int], np.ndarray] = {}


def _fill(dst: np.ndarray, color: Tuple[int, int, int], where: Optional[np.ndarray] = None) -> None:
    # copying from a pre-filled tile is an order of magnitude faster than
    # broadcasting a 3-tuple into a strided view
    h, w = dst.shape[:2]
    tile = _TILES.get(color)
    if tile is None or tile.shape[0] < h or tile.shape[1] < w:
        size = (max(h, 0 if tile is None else tile.shape[0]), max(w, 0 if tile is None else tile.shape[1]))
        tile = np.empty(size + (3,), dtype=np.uint8)
        tile[...] = color
        _TILES[color] = tile
    if where is None:
        np.copyto(dst, tile[:h, :w])
    else:
        np.copyto(dst, tile[:h, :w], where=where[..., None])


@functools.lru_cache(maxsize=64)
def _disk(radius: int) -> np.ndarray:
    yy, xx = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    return xx**2 + yy**2 <= radius**2


@functools.lru_cache(maxsize=4)
def _background(h: int, w: int) -> np.ndarray:
    bg = np.empty((h, w, 3), dtype=np.uint8)
    bg[...] = BACKGROUND
    bg.flags.writeable = False
    return bg


def render_frame(
    out: np.ndarray, detections: Sequence[Detection], erase: Optional[Sequence[Detection]] = None
) -> np.ndarray:
    """Paint flat-coloured actors on a flat background, in place.

    ``erase`` lists the detections last painted into ``out``; when given,
    only their boxes are reset to background instead of the whole frame.
    The result is identical either way.
    """
    h, w = out.shape[:2]
    if erase is None:
        np.copyto(out, _background(h, w))
    else:
        for d in erase:
            b = bounding_rbox(d.box)
            x0, y0 = max(b.x_left, 0), max(b.y_top, 0)
            x1, y1 = min(b.x_right, w - 1), min(b.y_bottom, h - 1)
            if x0 <= x1 and y0 <= y1:
                _fill(out[y0 : y1 + 1, x0 : x1 + 1], BACKGROUND)
    for d in sorted(detections, key=lambda d: d.cls == BALL):
        color = identity_color(d.cls, d.id_hint)
        box = d.box
        if isinstance(box, RBox):
            x0, y0 = max(box.x_left, 0), max(box.y_top, 0)
            x1, y1 = min(box.x_right, w - 1), min(box.y_bottom, h - 1)
            if x0 <= x1 and y0 <= y1:
                _fill(out[y0 : y1 + 1, x0 : x1 + 1], color)
            continue
        r = box.radius
        x0, x1 = max(box.cx - r, 0), min(box.cx + r, w - 1)
        y0, y1 = max(box.cy - r, 0), min(box.cy + r, h - 1)
        if x0 > x1 or y0 > y1:
            continue
        mask = _disk(r)[y0 - box.cy + r : y1 - box.cy + r + 1, x0 - box.cx + r : x1 - box.cx + r + 1]
        _fill(out[y0 : y1 + 1, x0 : x1 + 1], color, mask)
    return out
