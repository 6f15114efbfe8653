"""Image queue, crop records, box records, and byte-traffic accounting.

Layout::

    image_queue  (Q, H, W, 3)  uint8   ring buffer of decoded frames, Q << T
    person crops (T, P, 2L, L, 3) uint8  + (T, P, 4) int32 box coordinates
    ball crops   (T, B, L, L, 3)  uint8  + (T, B, 4) int32 box coordinates
    box records  (T, P+B, 4)   int32   ordered by identity, -1 when absent

Every read or write of these buffers is charged to a :class:`CostReport`
under the name of the stage doing it. Crop slots are laid out per identity,
so a feature extractor touches ``2L*L*3 + 16`` bytes per person instead of
a whole frame.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import FrameEvicted, ShapeError, SlotConflict
from .geometry import BALL, PERSON, Box, RBox, bounding_rbox, box_to_row, clip_to_frame

MODULES = ("decode", "detect", "crop", "extract", "records", "boxes", "action")
STAGES = ("decode", "detect", "gate", "associate", "extract", "action")
COORD_BYTES = 4 * np.dtype(np.int32).itemsize
ABSENT = -1


@dataclass
class CostReport:
    """Byte and invocation counters; all monotone within a run."""

    bytes_read: Dict[str, int] = field(default_factory=lambda: dict.fromkeys(MODULES, 0))
    bytes_written: Dict[str, int] = field(default_factory=lambda: dict.fromkeys(MODULES, 0))
    invocations: Dict[str, int] = field(default_factory=lambda: dict.fromkeys(STAGES, 0))
    frames: int = 0
    frames_gated: int = 0

    def read(self, module: str, n: int) -> None:
        self.bytes_read[module] += int(n)

    def write(self, module: str, n: int) -> None:
        self.bytes_written[module] += int(n)

    def invoke(self, stage: str, n: int = 1) -> None:
        self.invocations[stage] += n

    @property
    def total_read(self) -> int:
        return sum(self.bytes_read.values())

    @property
    def total_written(self) -> int:
        return sum(self.bytes_written.values())

    @property
    def total_bytes(self) -> int:
        return self.total_read + self.total_written

    def bytes_touched(self, modules) -> int:
        return sum(self.bytes_read[m] + self.bytes_written[m] for m in modules)

    def energy_proxy(self, alpha: float = 0.0) -> float:
        return float(self.total_bytes) + alpha * sum(self.invocations.values())

    def snapshot(self) -> "CostReport":
        return CostReport(
            dict(self.bytes_read), dict(self.bytes_written), dict(self.invocations),
            self.frames, self.frames_gated,
        )

    def items(self, alpha: float = 0.0) -> List[Tuple[str, object]]:
        out: List[Tuple[str, object]] = [("frames", self.frames), ("frames_gated", self.frames_gated)]
        out += [(f"bytes_read.{m}", self.bytes_read[m]) for m in MODULES]
        out += [(f"bytes_written.{m}", self.bytes_written[m]) for m in MODULES]
        out += [(f"invocations.{s}", self.invocations[s]) for s in STAGES]
        out += [
            ("bytes_read_total", self.total_read),
            ("bytes_written_total", self.total_written),
            ("alpha", format(alpha, "g")),
            ("energy_proxy", format(self.energy_proxy(alpha), ".17g")),
        ]
        return out

    def to_text(self, alpha: float = 0.0) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.items(alpha))

    @classmethod
    def from_text(cls, text: str) -> "CostReport":
        rep = cls()
        for line in text.splitlines():
            if "=" not in line:
                continue
            k, _, v = line.strip().partition("=")
            head, _, mod = k.partition(".")
            if head == "bytes_read" and mod:
                rep.bytes_read[mod] = int(v)
            elif head == "bytes_written" and mod:
                rep.bytes_written[mod] = int(v)
            elif head == "invocations" and mod:
                rep.invocations[mod] = int(v)
            elif k in ("frames", "frames_gated"):
                setattr(rep, k, int(v))
        return rep


class ImageQueue:
    """Ring buffer of the last ``Q`` decoded frames."""

    def __init__(self, capacity: int, height: int, width: int, report: Optional[CostReport] = None):
        if capacity < 1:
            raise ValueError("queue capacity must be positive")
        self.capacity = capacity
        self.shape = (height, width, 3)
        self.frame_bytes = height * width * 3
        self.data = np.zeros((capacity, *self.shape), dtype=np.uint8)
        self.ids = [-1] * capacity
        self.head = 0
        self.count = 0
        self.report = report if report is not None else CostReport()

    def _advance(self, t: int) -> int:
        slot = self.head
        self.ids[slot] = t
        self.head = (slot + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)
        self.report.write("decode", self.frame_bytes)
        return slot

    def push_frame(self, pixels: np.ndarray, t: int) -> None:
        if pixels.shape != self.shape:
            raise ShapeError(f"frame shape {pixels.shape} != {self.shape}")
        self.data[self.head] = pixels
        self._advance(t)

    def push_rendered(self, t: int, render) -> np.ndarray:
        """Decode straight into the next slot: ``render(view)`` fills it."""
        view = self.data[self.head]
        render(view)
        self._advance(t)
        return view

    def _slot(self, t: int) -> int:
        for k in range(self.count):
            slot = (self.head - 1 - k) % self.capacity
            if self.ids[slot] == t:
                return slot
        raise FrameEvicted(f"frame {t} is not in the queue")

    def __contains__(self, t: int) -> bool:
        try:
            self._slot(t)
        except FrameEvicted:
            return False
        return True

    def read(self, t: int, module: str = "extract") -> np.ndarray:
        view = self.data[self._slot(t)]
        self.report.read(module, self.frame_bytes)
        return view

    def read_region(self, t: int, rect: RBox, module: str) -> np.ndarray:
        view = self.data[self._slot(t), rect.y_top : rect.y_bottom + 1, rect.x_left : rect.x_right + 1]
        self.report.read(module, view.nbytes)
        return view

    def frame_ids(self) -> List[int]:
        """Readable frame indices, oldest first."""
        return [self.ids[(self.head - self.count + k) % self.capacity] for k in range(self.count)]


def crop_shape(cls: str, side: int) -> Tuple[int, int, int]:
    return (2 * side, side, 3) if cls == PERSON else (side, side, 3)


def slot_payload(cls: str, side: int) -> int:
    """Bytes in one crop slot: pixels plus four int32 box coordinates."""
    h, w, c = crop_shape(cls, side)
    return h * w * c + COORD_BYTES


@functools.lru_cache(maxsize=4096)
def _resize_index(h: int, w: int, c: int, out_h: int, out_w: int) -> Tuple[np.ndarray, np.ndarray]:
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    # byte offsets inside one row of an (h, w*c) view
    byte_cols = (cols[:, None] * c + np.arange(c)).ravel()
    return rows, byte_cols


def resize_nearest(region: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = region.shape[:2]
    c = region.shape[2] if region.ndim == 3 else 1
    rows, byte_cols = _resize_index(h, w, c, out_h, out_w)
    # gathering columns on a 2-D byte view first is about twice as fast as
    # two axis-wise takes on the (h, w, c) array
    flat = region.reshape(h, w * c)
    out = flat.take(byte_cols, axis=1).take(rows, axis=0)
    return out.reshape((out_h, out_w) + region.shape[2:])


class CropRecords:
    """Per-frame, per-identity crop slots (written once each) plus a staging row.

    Crops of the current frame are staged by detection index, the feature
    extractor reads them from there, and after identities are known each is
    committed to its ``(frame, identity)`` slot.
    """

    def __init__(self, T: int, persons: int, balls: int, side: int = 64,
                 report: Optional[CostReport] = None):
        self.T, self.side = T, side
        self.capacity = {PERSON: persons, BALL: balls}
        self.report = report if report is not None else CostReport()
        self.pixels = {
            cls: np.zeros((T, n, *crop_shape(cls, side)), dtype=np.uint8)
            for cls, n in self.capacity.items()
        }
        self.boxes = {cls: np.full((T, n, 4), ABSENT, dtype=np.int32) for cls, n in self.capacity.items()}
        self.written = {cls: np.zeros((T, n), dtype=bool) for cls, n in self.capacity.items()}
        self._stage_pixels = {cls: np.zeros((0, *crop_shape(cls, side)), dtype=np.uint8) for cls in self.capacity}
        self._stage_boxes: Dict[str, List[Tuple[int, int, int, int]]] = {PERSON: [], BALL: []}
        self._payload = {cls: slot_payload(cls, side) for cls in (PERSON, BALL)}

    def payload(self, cls: str) -> int:
        return self._payload[cls]

    def cut(self, frame: np.ndarray, box: Box, cls: str) -> np.ndarray:
        """Resize the box region of a frame to the slot shape (nearest neighbour)."""
        h, w = frame.shape[:2]
        r = clip_to_frame(bounding_rbox(box), w, h)
        region = frame[r.y_top : r.y_bottom + 1, r.x_left : r.x_right + 1]
        self.report.read("crop", region.nbytes)
        ch, cw, _ = crop_shape(cls, self.side)
        return resize_nearest(region, ch, cw)

    def reset_stage(self) -> None:
        for cls in self._stage_boxes:
            self._stage_boxes[cls] = []

    def stage(self, cls: str, crop: np.ndarray, box: Box) -> int:
        """Stage a crop for the current frame; returns its staging index."""
        if crop.shape != crop_shape(cls, self.side):
            raise ShapeError(f"{cls} crop shape {crop.shape} != {crop_shape(cls, self.side)}")
        k = len(self._stage_boxes[cls])
        buf = self._stage_pixels[cls]
        if k >= buf.shape[0]:
            grown = np.zeros((max(4, 2 * buf.shape[0]), *buf.shape[1:]), dtype=np.uint8)
            grown[: buf.shape[0]] = buf
            self._stage_pixels[cls] = buf = grown
        buf[k] = crop
        self._stage_boxes[cls].append(box_to_row(box))
        self.report.write("crop", self.payload(cls))
        return k

    def staged(self, cls: str, k: int, module: str = "extract") -> np.ndarray:
        self.report.read(module, self.payload(cls))
        return self._stage_pixels[cls][k]

    def _claim(self, t: int, cls: str, identity: int) -> int:
        j = identity - 1
        if not 0 <= j < self.capacity[cls]:
            raise IndexError(f"{cls} identity {identity} outside 1..{self.capacity[cls]}")
        if self.written[cls][t, j]:
            raise SlotConflict(f"slot (t={t}, {cls} {identity}) already written")
        self.written[cls][t, j] = True
        return j

    def commit(self, t: int, cls: str, k: int, identity: int) -> None:
        j = self._claim(t, cls, identity)
        payload = self.payload(cls)
        self.report.read("records", payload)
        self.pixels[cls][t, j] = self._stage_pixels[cls][k]
        self.boxes[cls][t, j] = self._stage_boxes[cls][k]
        self.report.write("records", payload)

    def record_crop(self, t: int, cls: str, identity: int, crop: np.ndarray, box: Box) -> None:
        if crop.shape != crop_shape(cls, self.side):
            raise ShapeError(f"{cls} crop shape {crop.shape} != {crop_shape(cls, self.side)}")
        j = self._claim(t, cls, identity)
        self.pixels[cls][t, j] = crop
        self.boxes[cls][t, j] = box_to_row(box)
        self.report.write("records", self.payload(cls))

    def read_crop(self, t: int, cls: str, identity: int) -> Tuple[np.ndarray, Tuple[int, ...]]:
        j = identity - 1
        if not self.written[cls][t, j]:
            raise KeyError(f"slot (t={t}, {cls} {identity}) is empty")
        self.report.read("records", self.payload(cls))
        return self.pixels[cls][t, j], tuple(int(v) for v in self.boxes[cls][t, j])

    def slots(self) -> Iterator[Tuple[int, str, int]]:
        for cls, mask in self.written.items():
            for t, j in zip(*np.nonzero(mask)):
                yield int(t), cls, int(j) + 1


class BoxRecords:
    """``(T, P+B, 4)`` int32 boxes, persons first, each class ordered by id."""

    def __init__(self, T: int, persons: int, balls: int, report: Optional[CostReport] = None):
        self.T, self.persons, self.balls = T, persons, balls
        self.data = np.full((T, persons + balls, 4), ABSENT, dtype=np.int32)
        self.report = report if report is not None else CostReport()

    def column(self, cls: str, identity: int) -> int:
        limit = self.persons if cls == PERSON else self.balls
        if not 1 <= identity <= limit:
            raise IndexError(f"{cls} identity {identity} outside 1..{limit}")
        return identity - 1 if cls == PERSON else self.persons + identity - 1

    def write(self, t: int, cls: str, identity: int, box: Box) -> None:
        self.data[t, self.column(cls, identity)] = box_to_row(box)
        self.report.write("boxes", COORD_BYTES)

    def get(self, t: int, cls: str, identity: int) -> Optional[Tuple[int, ...]]:
        row = self.data[t, self.column(cls, identity)]
        if np.all(row == ABSENT):
            return None
        return tuple(int(v) for v in row)

    def read_all(self, module: str = "action") -> Tuple[np.ndarray, np.ndarray]:
        """Person rows (T, P, 4) and ball rows (T, B, 4), charged as one sweep."""
        self.report.read(module, self.data.nbytes)
        return self.data[:, : self.persons], self.data[:, self.persons :]
