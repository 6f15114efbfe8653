"""Identity tagging against a gallery of per-identity appearance queues.

Each detection's appearance feature is a query; each identity keeps a
tracklet holding its latest ``K`` features. The query-to-tracklet cost is
the smallest cosine distance to any stored feature, costs above ``tau``
are infeasible, and the assignment is solved per class.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .assignment import INFEASIBLE, solve_assignment
from .errors import (
    BootstrapUnderflow,
    DegenerateFeature,
    EmptyTracklet,
    ExtractionError,
    ShapeError,
)
from .geometry import BALL, CLASSES, PERSON, Detection, TaggedDetection

log = logging.getLogger(__name__)

DEFAULT_K = 5
DEFAULT_TAU = 0.4
DEFAULT_DIM = 64

# distances this close to zero are rounding noise from normalisation
_ZERO_SNAP = 1e-12


class FeatureVector:
    """Appearance embedding with its Euclidean norm cached."""

    __slots__ = ("values", "norm", "_unit")

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise DegenerateFeature("feature has non-finite entries")
        self.values = arr
        self.norm = float(np.sqrt(arr @ arr))
        self._unit = None

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def unit(self) -> np.ndarray:
        if self._unit is None:
            if self.norm == 0.0:
                raise DegenerateFeature("zero-norm feature")
            self._unit = self.values / self.norm
        return self._unit

    def __repr__(self):
        return f"FeatureVector(dim={self.dim}, norm={self.norm:.4g})"


def _snap(d):
    d = np.clip(d, 0.0, 2.0)
    return np.where(d < _ZERO_SNAP, 0.0, d)


def feature_distance(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine distance ``1 - <a,b>/(|a||b|)``, in [0, 2]."""
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch {a.dim} vs {b.dim}")
    return float(_snap(1.0 - float(a.unit @ b.unit)))


class Tracklet:
    """Bounded FIFO of the latest features seen for one identity."""

    def __init__(self, identity: int, capacity: int, last_seen: int = -1):
        if capacity < 1:
            raise ValueError("tracklet capacity must be positive")
        self.identity = identity
        self.features: deque = deque(maxlen=capacity)
        self.last_seen = last_seen
        # unit vectors in ring order; row order is irrelevant to the min-distance cost
        self._ring: Optional[np.ndarray] = None
        self._head = 0

    @property
    def capacity(self) -> int:
        return self.features.maxlen

    def push(self, feature: FeatureVector, frame: int) -> None:
        if self._ring is None:
            self._ring = np.empty((self.capacity, feature.dim))
        elif feature.dim != self._ring.shape[1]:
            raise ShapeError(f"dimension mismatch {feature.dim} vs {self._ring.shape[1]}")
        self._ring[self._head] = feature.unit
        self._head = (self._head + 1) % self.capacity
        self.features.append(feature)
        self.last_seen = frame

    def unit_stack(self) -> np.ndarray:
        if not self.features:
            raise EmptyTracklet(f"tracklet {self.identity} is empty")
        return self._ring[: len(self.features)]

    def __len__(self):
        return len(self.features)

    def __repr__(self):
        return f"Tracklet(id={self.identity}, n={len(self)}, last_seen={self.last_seen})"


def tracklet_cost(q: FeatureVector, t: Tracklet) -> float:
    stack = t.unit_stack()
    if stack.shape[1] != q.dim:
        raise ShapeError(f"dimension mismatch {q.dim} vs {stack.shape[1]}")
    return float(_snap(1.0 - stack @ q.unit).min())


@dataclass
class TrackletGallery:
    K: int = DEFAULT_K
    tau: float = DEFAULT_TAU
    persons: List[Tracklet] = field(default_factory=list)
    balls: List[Tracklet] = field(default_factory=list)

    def tracklets(self, cls: str) -> List[Tracklet]:
        return self.persons if cls == PERSON else self.balls

    def get(self, cls: str, identity: int) -> Optional[Tracklet]:
        for t in self.tracklets(cls):
            if t.identity == identity:
                return t
        return None

    def add(self, cls: str, identity: int, feature: FeatureVector, frame: int) -> Tracklet:
        if self.get(cls, identity) is not None:
            raise ValueError(f"duplicate {cls} identity {identity}")
        t = Tracklet(identity, self.K)
        t.push(feature, frame)
        self.tracklets(cls).append(t)
        return t

    def __len__(self):
        return len(self.persons) + len(self.balls)


def build_cost_matrix(
    queries: Sequence[FeatureVector], tracklets: Sequence[Tracklet], tau: float
) -> np.ndarray:
    """Entry (i, j) is ``tracklet_cost(q_i, t_j)`` or ``INFEASIBLE`` above ``tau``."""
    cost = np.full((len(queries), len(tracklets)), INFEASIBLE)
    if not queries or not tracklets:
        return cost
    dims = {q.dim for q in queries}
    if len(dims) != 1:
        raise ShapeError(f"queries have mixed dimensions {sorted(dims)}")
    qmat = np.stack([q.unit for q in queries])
    stacks = [t.unit_stack() for t in tracklets]
    for stack in stacks:
        if stack.shape[1] != qmat.shape[1]:
            raise ShapeError(f"dimension mismatch {qmat.shape[1]} vs {stack.shape[1]}")
    # one product against every stored feature, then a min per tracklet block
    offsets = list(itertools.accumulate([len(st) for st in stacks[:-1]], initial=0))
    dist = _snap(1.0 - qmat @ np.concatenate(stacks).T)
    cost[:] = np.minimum.reduceat(dist, offsets, axis=1)
    cost[cost > tau] = INFEASIBLE
    return cost


def update_gallery(
    gallery: TrackletGallery,
    cls: str,
    assignments: Iterable[Tuple[int, int]],
    features: Sequence[FeatureVector],
    frame: int,
) -> None:
    """Enqueue each matched query feature into its tracklet."""
    tracklets = gallery.tracklets(cls)
    for qi, tj in assignments:
        tracklets[tj].push(features[qi], frame)


def associate_features(
    classes: Sequence[str],
    features: Sequence[Optional[FeatureVector]],
    gallery: TrackletGallery,
    frame: int,
) -> List[Tuple[int, int]]:
    """Core of :func:`associate` on precomputed features.

    Detections whose feature is ``None`` are skipped. Returns
    ``(detection_index, identity)`` for matched detections, in input order.
    """
    matched: List[Tuple[int, int]] = []
    for cls in CLASSES:
        idx = [k for k, c in enumerate(classes) if c == cls and features[k] is not None]
        tracklets = gallery.tracklets(cls)
        if not idx or not tracklets:
            continue
        queries = [features[k] for k in idx]
        cost = build_cost_matrix(queries, tracklets, gallery.tau)
        pairs = solve_assignment(cost)
        update_gallery(gallery, cls, pairs, queries, frame)
        matched.extend((idx[qi], tracklets[tj].identity) for qi, tj in pairs)
    matched.sort()
    return matched


Extractor = Callable[[Optional[np.ndarray], Detection], FeatureVector]


def associate(
    detections: Sequence[Detection],
    gallery: TrackletGallery,
    extractor: Extractor,
    crops: Optional[Sequence[Optional[np.ndarray]]] = None,
) -> List[TaggedDetection]:
    """Tag one frame's detections with gallery identities.

    Unmatched detections are dropped; a failed extraction drops only that
    detection.
    """
    if not detections:
        return []
    features: List[Optional[FeatureVector]] = []
    for k, det in enumerate(detections):
        crop = crops[k] if crops is not None else None
        try:
            features.append(extractor(crop, det))
        except ExtractionError as exc:
            log.debug("dropping detection %d at frame %d: %s", k, det.frame, exc)
            features.append(None)
    frame = detections[0].frame
    matched = associate_features([d.cls for d in detections], features, gallery, frame)
    return [TaggedDetection(detections[k], identity) for k, identity in matched]


def bootstrap_gallery(
    seeds: Iterable[Tuple[TaggedDetection, FeatureVector]],
    persons: int,
    balls: int,
    *,
    K: int = DEFAULT_K,
    tau: float = DEFAULT_TAU,
) -> TrackletGallery:
    """Seed one tracklet per declared identity (ids ``1..P`` and ``1..B``).

    The first seed seen for each identity wins; seeds outside the declared
    id ranges are ignored.
    """
    gallery = TrackletGallery(K=K, tau=tau)
    limits = {PERSON: persons, BALL: balls}
    for tagged, feature in seeds:
        cls, identity = tagged.cls, tagged.identity
        if not 1 <= identity <= limits[cls] or gallery.get(cls, identity) is not None:
            continue
        gallery.add(cls, identity, feature, tagged.frame)
    missing = [
        f"{cls}:{i}"
        for cls in CLASSES
        for i in range(1, limits[cls] + 1)
        if gallery.get(cls, i) is None
    ]
    if missing:
        raise BootstrapUnderflow(f"no seed detection for {', '.join(missing)}")
    gallery.persons.sort(key=lambda t: t.identity)
    gallery.balls.sort(key=lambda t: t.identity)
    return gallery
