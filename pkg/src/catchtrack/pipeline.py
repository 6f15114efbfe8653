"""Frame loop: decode -> region crop -> detect -> gate -> crop/extract -> associate -> record.

After the last frame the box records are swept once to build every ball's
gated signal and extract catch/throw events. Byte traffic of every buffer
access is charged to a :class:`CostReport`.

In scenario mode the "decoder" renders the scenario's detections as flat
colour shapes straight into the image queue, and the "detector" reports the
scenario detections visible inside the activity region.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .actions import ActionEvent, detect_actions_from_signals, gated_signals_from_records
from .adaptive import (
    ActivityRegion,
    activity_region,
    collision_gate,
    full_frame,
    margins_for,
    visible_in,
)
from .association import TrackletGallery, associate_features, bootstrap_gallery
from .buffers import BoxRecords, CostReport, CropRecords, ImageQueue, crop_shape, resize_nearest
from .config import RunConfig
from .errors import BootstrapUnderflow, EmptyRegion, ExtractionError
from .extractors import make_extractor
from .geometry import BALL, PERSON, Detection, TaggedDetection, bounding_rbox, clip_to_frame
from .scenario import Scenario
from .simulator import render_frame

log = logging.getLogger(__name__)


class Pipeline:
    """One run over one scenario. Buffers stay inspectable after :meth:`run`."""

    def __init__(self, scenario: Scenario, config: RunConfig = RunConfig()):
        self.scenario = scenario
        self.config = config
        s = scenario
        self.theta = config.resolved_theta(s.theta)
        self.min_possession = config.resolved_min_possession(self.theta)
        self.report = CostReport()
        self.queue = ImageQueue(config.queue_size, s.height, s.width, self.report)
        self.crops = CropRecords(s.T, s.persons, s.balls, config.crop_side, self.report)
        self.boxes = BoxRecords(s.T, s.persons, s.balls, self.report)
        self.extractor = make_extractor(
            config.extractor, persons=s.persons, balls=s.balls, dim=config.dim
        )
        self.gallery: Optional[TrackletGallery] = None
        self._seeds: list = []
        self._seeded: set = set()
        self.margins = margins_for(s.width, s.height, config.arc_dx_frac, config.arc_dy_frac)
        self.regions: List[ActivityRegion] = []
        # detections painted in each queue slot, so a reused slot is only
        # repainted where actors were
        self._painted: List[Optional[Sequence[Detection]]] = [None] * self.queue.capacity
        self.events: List[ActionEvent] = []

    # -- per-frame stages ------------------------------------------------

    def _detect(self, t: int, region: ActivityRegion) -> List[Detection]:
        self.queue.read_region(t, region.rect, "detect")
        self.report.invoke("detect")
        return visible_in(self.scenario.frames[t], region)

    def _next_region(self, t: int, dets: Sequence[Detection]) -> ActivityRegion:
        s, cfg = self.scenario, self.config
        refresh = cfg.arc_refresh_every and (t + 1) % cfg.arc_refresh_every == 0
        if not cfg.arc_enabled or not dets or refresh:
            return full_frame(s.width, s.height, t)
        dx, dy = self.margins
        return activity_region([d.box for d in dets], dx, dy, s.width, s.height, t)

    def _features(self, t: int, dets: Sequence[Detection]):
        """Feature per detection (None on failure) and its staging index."""
        crops_mode = self.config.feature_mode == "crops"
        frame = self.queue.data[self.queue._slot(t)]
        h, w = frame.shape[:2]
        side = self.config.crop_side
        self.crops.reset_stage()
        feats, stage_idx = [], []
        for det in dets:
            k = -1
            try:
                if crops_mode:
                    crop = self.crops.cut(frame, det.box, det.cls)
                    k = self.crops.stage(det.cls, crop, det.box)
                    pixels = self.crops.staged(det.cls, k)
                else:
                    full = self.queue.read(t, "extract")
                    r = clip_to_frame(bounding_rbox(det.box), w, h)
                    ch, cw, _ = crop_shape(det.cls, side)
                    pixels = resize_nearest(full[r.y_top : r.y_bottom + 1, r.x_left : r.x_right + 1], ch, cw)
                self.report.invoke("extract")
                feats.append(self.extractor(pixels, det))
            except (ExtractionError, EmptyRegion) as exc:
                log.debug("frame %d: dropping %s detection: %s", t, det.cls, exc)
                feats.append(None)
            stage_idx.append(k)
        return feats, stage_idx

    def _bootstrap(self, t: int, dets, feats) -> List[Tuple[int, int]]:
        """Tag by id hint until every declared identity has a seed feature."""
        s = self.scenario
        limits = {PERSON: s.persons, BALL: s.balls}
        matched, used = [], set()
        for k, (det, feat) in enumerate(zip(dets, feats)):
            key = (det.cls, det.id_hint)
            if feat is None or det.id_hint is None or not 1 <= det.id_hint <= limits[det.cls]:
                continue
            if key in used:
                continue
            used.add(key)
            matched.append((k, det.id_hint))
            if key not in self._seeded:
                self._seeded.add(key)
                self._seeds.append((TaggedDetection(det, det.id_hint), feat))
        if len(self._seeded) == s.persons + s.balls:
            self.gallery = bootstrap_gallery(
                self._seeds, s.persons, s.balls, K=self.config.K, tau=self.config.tau
            )
        elif t >= self.config.bootstrap_frames - 1:
            # raises with the list of missing identities
            bootstrap_gallery(self._seeds, s.persons, s.balls, K=self.config.K, tau=self.config.tau)
        return matched

    def step(self, t: int, region: ActivityRegion) -> ActivityRegion:
        s, cfg = self.scenario, self.config
        self.report.frames += 1
        slot = self.queue.head
        self.queue.push_rendered(t, lambda view: render_frame(view, s.frames[t], self._painted[slot]))
        self._painted[slot] = s.frames[t]
        self.report.invoke("decode")
        self.regions.append(region)
        dets = self._detect(t, region)
        nxt = self._next_region(t, dets)

        if cfg.ci_enabled and self.gallery is not None:
            self.report.invoke("gate")
            if not collision_gate(dets).run_downstream:
                self.report.frames_gated += 1
                return nxt

        feats, stage_idx = self._features(t, dets)
        if self.gallery is None:
            matched = self._bootstrap(t, dets, feats)
        else:
            self.report.invoke("associate")
            matched = associate_features([d.cls for d in dets], feats, self.gallery, t)
        for k, identity in matched:
            det = dets[k]
            if stage_idx[k] >= 0:
                self.crops.commit(t, det.cls, stage_idx[k], identity)
            self.boxes.write(t, det.cls, identity, det.box)
        return nxt

    def run(self) -> Tuple[List[ActionEvent], CostReport]:
        s = self.scenario
        if s.T == 0:
            return [], self.report
        if s.persons + s.balls == 0:
            self.gallery = TrackletGallery(K=self.config.K, tau=self.config.tau)
        region = full_frame(s.width, s.height)
        for t in range(s.T):
            region = self.step(t, region)
        person_rows, ball_rows = self.boxes.read_all("action")
        self.report.invoke("action")
        signals = gated_signals_from_records(
            person_rows, ball_rows, range(1, s.persons + 1), range(1, s.balls + 1)
        )
        self.events = detect_actions_from_signals(signals, self.theta, self.min_possession)
        return self.events, self.report


def run(scenario: Scenario, config: RunConfig = RunConfig()) -> Tuple[List[ActionEvent], CostReport]:
    return Pipeline(scenario, config).run()


FEATURE_PATH = ("crop", "extract", "records")


def feature_path_bytes(report: CostReport) -> int:
    """Bytes moved to get pixels to the feature extractor and into crop records."""
    return report.bytes_touched(FEATURE_PATH)
