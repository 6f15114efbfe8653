"""Scenario container and its line-oriented text format.

::

    scenario P=5 B=4 T=900 W=960 H=540 theta=8
    det t=0 class=person id_hint=1 100 200 139 279 conf=1
    det t=0 class=ball id_hint=2 120 240 8 8 conf=1 shape=c
    gt catch t=31 ball=2 person=3

Ball C-boxes are written as ``cx cy r r`` plus ``shape=c``. Blank lines and
``#`` comments are ignored. Coordinates may be fractional and are floored.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from .actions import CATCH, THROW, ActionEvent, sort_events
from .errors import ParseError
from .geometry import BALL, PERSON, CBox, Detection, RBox, to_pixel

_HEADER_KEYS = ("P", "B", "T", "W", "H")


@dataclass
class Scenario:
    persons: int
    balls: int
    T: int
    width: int
    height: int
    frames: List[List[Detection]] = field(default_factory=list)
    events: List[ActionEvent] = field(default_factory=list)
    theta: Optional[int] = None

    def __post_init__(self):
        if not self.frames:
            self.frames = [[] for _ in range(self.T)]
        if len(self.frames) != self.T:
            raise ValueError(f"{len(self.frames)} frame lists for T={self.T}")

    @property
    def N(self) -> int:
        return self.persons + self.balls

    def detections(self):
        for frame in self.frames:
            yield from frame


def _fmt_real(x: float) -> str:
    return format(float(x), ".6g")


def detection_line(d: Detection) -> str:
    hint = "-" if d.id_hint is None else str(d.id_hint)
    if isinstance(d.box, CBox):
        c = d.box
        coords = f"{c.cx} {c.cy} {c.radius} {c.radius}"
        tail = " shape=c"
    else:
        coords = " ".join(str(v) for v in d.box)
        tail = ""
    return f"det t={d.frame} class={d.cls} id_hint={hint} {coords} conf={_fmt_real(d.confidence)}{tail}"


def event_gt_line(e: ActionEvent) -> str:
    return f"gt {e.kind} t={e.frame} ball={e.ball_id} person={e.person_id}"


def dumps(s: Scenario) -> str:
    buf = io.StringIO()
    write(s, buf)
    return buf.getvalue()


def write(s: Scenario, fh: TextIO) -> None:
    header = f"scenario P={s.persons} B={s.balls} T={s.T} W={s.width} H={s.height}"
    if s.theta is not None:
        header += f" theta={s.theta}"
    fh.write(header + "\n")
    for frame in s.frames:
        for d in frame:
            fh.write(detection_line(d) + "\n")
    for e in sort_events(s.events):
        fh.write(event_gt_line(e) + "\n")


def save(s: Scenario, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        write(s, fh)


def _split(tokens: Sequence[str], lineno: int) -> Tuple[Dict[str, str], List[str]]:
    keys: Dict[str, str] = {}
    pos: List[str] = []
    for tok in tokens:
        if "=" in tok:
            k, _, v = tok.partition("=")
            if not k or k in keys:
                raise ParseError(f"bad or repeated key in {tok!r}", lineno)
            keys[k] = v
        else:
            pos.append(tok)
    return keys, pos


def _int(v: str, what: str, lineno: int) -> int:
    try:
        return int(v)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {v!r}", lineno) from None


def _coord(v: str, lineno: int) -> int:
    try:
        return to_pixel(float(v))
    except ValueError:
        raise ParseError(f"bad coordinate {v!r}", lineno) from None


def _parse_det(keys, pos, lineno, T) -> Detection:
    for k in ("t", "class", "id_hint", "conf"):
        if k not in keys:
            raise ParseError(f"det line missing {k}=", lineno)
    extra = set(keys) - {"t", "class", "id_hint", "conf", "shape"}
    if extra:
        raise ParseError(f"unknown det keys {sorted(extra)}", lineno)
    t = _int(keys["t"], "t", lineno)
    if not 0 <= t < T:
        raise ParseError(f"frame {t} outside [0, {T})", lineno)
    cls = keys["class"]
    if cls not in (PERSON, BALL):
        raise ParseError(f"unknown class {cls!r}", lineno)
    hint = None if keys["id_hint"] == "-" else _int(keys["id_hint"], "id_hint", lineno)
    try:
        conf = float(keys["conf"])
    except ValueError:
        raise ParseError(f"bad conf {keys['conf']!r}", lineno) from None
    if len(pos) != 4:
        raise ParseError(f"expected 4 coordinates, got {len(pos)}", lineno)
    shape = keys.get("shape", "r")
    try:
        if shape == "c":
            if cls != BALL:
                raise ParseError("shape=c is only valid for balls", lineno)
            cx, cy, r, _ = (_coord(p, lineno) for p in pos)
            box = CBox(cx, cy, r)
        elif shape == "r":
            x1, y1, x2, y2 = (_coord(p, lineno) for p in pos)
            if cls == BALL:
                # rectangle ball: keep its inscribed circle
                box = CBox((x1 + x2) // 2, (y1 + y2) // 2, min(x2 - x1, y2 - y1) // 2)
            else:
                box = RBox(x1, y1, x2, y2)
        else:
            raise ParseError(f"unknown shape {shape!r}", lineno)
        return Detection(box, cls, conf, t, hint)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None


def _parse_gt(keys, pos, lineno) -> ActionEvent:
    if len(pos) != 1 or pos[0] not in (CATCH, THROW):
        raise ParseError("gt line needs kind catch|throw", lineno)
    for k in ("t", "ball", "person"):
        if k not in keys:
            raise ParseError(f"gt line missing {k}=", lineno)
    return ActionEvent(
        pos[0],
        _int(keys["t"], "t", lineno),
        _int(keys["ball"], "ball", lineno),
        _int(keys["person"], "person", lineno),
    )


def parse(lines: Iterable[str]) -> Scenario:
    header = None
    frames: List[List[Detection]] = []
    events: List[ActionEvent] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        keys, pos = _split(rest, lineno)
        if head == "scenario":
            if header is not None:
                raise ParseError("duplicate scenario header", lineno)
            missing = [k for k in _HEADER_KEYS if k not in keys]
            if missing:
                raise ParseError(f"header missing {missing}", lineno)
            extra = set(keys) - set(_HEADER_KEYS) - {"theta"}
            if extra or pos:
                raise ParseError(f"unexpected header fields {sorted(extra) or pos}", lineno)
            header = {k: _int(v, k, lineno) for k, v in keys.items()}
            if header["P"] < 0 or header["B"] < 0 or header["T"] < 0:
                raise ParseError("P, B, T must be non-negative", lineno)
            if header["W"] <= 0 or header["H"] <= 0:
                raise ParseError("W and H must be positive", lineno)
            frames = [[] for _ in range(header["T"])]
        elif header is None:
            raise ParseError("first record must be the scenario header", lineno)
        elif head == "det":
            d = _parse_det(keys, pos, lineno, header["T"])
            frames[d.frame].append(d)
        elif head == "gt":
            events.append(_parse_gt(keys, pos, lineno))
        else:
            raise ParseError(f"unknown record type {head!r}", lineno)
    if header is None:
        raise ParseError("empty scenario (no header)", None)
    return Scenario(
        header["P"], header["B"], header["T"], header["W"], header["H"],
        frames, sort_events(events), header.get("theta"),
    )


def loads(text: str) -> Scenario:
    return parse(text.splitlines())


def load(path) -> Scenario:
    if not os.path.exists(path):
        raise ParseError(f"no such scenario file: {path}")
    with open(path, encoding="ascii") as fh:
        return parse(fh)


def format_events(events: Iterable[ActionEvent]) -> str:
    return "".join(e.to_line() + "\n" for e in sort_events(events))


def parse_events(lines: Iterable[str]) -> List[ActionEvent]:
    """Read ``kind,frame,ball,person`` lines, or the gt lines of a scenario file."""
    lines = list(lines)
    first = next((ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")), "")
    if first.startswith("scenario"):
        return parse(lines).events
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4 or parts[0] not in (CATCH, THROW):
            raise ParseError(f"malformed event line {line!r}", lineno)
        try:
            out.append(ActionEvent(parts[0], *(int(p) for p in parts[1:])))
        except ValueError:
            raise ParseError(f"malformed event line {line!r}", lineno) from None
    return sort_events(out)


def load_events(path) -> List[ActionEvent]:
    if not os.path.exists(path):
        raise ParseError(f"no such events file: {path}")
    with open(path, encoding="ascii") as fh:
        return parse_events(fh)
