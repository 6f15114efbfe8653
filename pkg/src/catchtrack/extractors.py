"""Feature-extractor registry.

An extractor is a callable ``(crop, detection) -> FeatureVector`` that
raises :class:`ExtractionError` when it cannot embed a detection. ``crop``
is the detection's pixels resized to its slot shape, or ``None`` when the
caller has no pixels. Factories are registered by name and built with the
scenario context (``persons``, ``balls``, ``dim``).
"""

from __future__ import annotations

from typing import Callable, Dict, Optional

import numpy as np

from .association import DEFAULT_DIM, Extractor, FeatureVector
from .errors import ExtractionError, UnknownIdentity
from .geometry import Detection, center
from .simulator import oracle_features

_REGISTRY: Dict[str, Callable[..., Extractor]] = {}


def register_extractor(name: str):
    def deco(factory):
        if name in _REGISTRY:
            raise ValueError(f"extractor {name!r} already registered")
        _REGISTRY[name] = factory
        return factory

    return deco


def available_extractors():
    return sorted(_REGISTRY)


def make_extractor(name: str, **context) -> Extractor:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown extractor {name!r}; choose from {available_extractors()}") from None
    return factory(**context)


@register_extractor("oracle")
class OracleExtractor:
    """Identity-aware reference extractor for simulated streams.

    Uses the feature the noise model attached to a detection when there is
    one, otherwise the clean basis vector of its ``id_hint``. Detections
    without a hint (spurious blips) get a pseudo-random vector keyed on
    their frame and position.
    """

    needs_pixels = False

    def __init__(self, persons: int, balls: int, dim: int = DEFAULT_DIM, **_):
        self.persons, self.balls, self.dim = persons, balls, dim
        self._clean: Dict[tuple, FeatureVector] = {}

    def __call__(self, crop: Optional[np.ndarray], det: Detection) -> FeatureVector:
        if det.feature is not None:
            if det.feature.shape != (self.dim,):
                raise ExtractionError(f"attached feature has shape {det.feature.shape}")
            return FeatureVector(det.feature)
        if det.id_hint is None:
            x, y = center(det.box)
            rng = np.random.default_rng([det.frame, x % 2**32, y % 2**32])
            return FeatureVector(rng.normal(size=self.dim))
        key = (det.cls, det.id_hint)
        feat = self._clean.get(key)
        if feat is None:
            try:
                feat = oracle_features(
                    det.id_hint, cls=det.cls, persons=self.persons, balls=self.balls, dim=self.dim
                )
            except UnknownIdentity as exc:
                raise ExtractionError(str(exc)) from None
            feat.values.flags.writeable = False
            self._clean[key] = feat
        return feat


@register_extractor("histogram")
class HistogramExtractor:
    """Colour histogram of the crop, 4 levels per channel (64 bins)."""

    needs_pixels = True
    levels = 4

    def __init__(self, dim: int = DEFAULT_DIM, **_):
        if dim != self.levels**3:
            raise ValueError(f"histogram extractor produces {self.levels ** 3}-d features, not {dim}")
        self.dim = dim

    def __call__(self, crop: Optional[np.ndarray], det: Detection) -> FeatureVector:
        if crop is None or crop.size == 0:
            raise ExtractionError("histogram extractor needs pixels")
        q = crop.reshape(-1, 3) >> 6
        bins = (q[:, 0].astype(np.int64) * 16) + q[:, 1] * 4 + q[:, 2]
        hist = np.bincount(bins, minlength=self.dim).astype(np.float64)
        return FeatureVector(hist)
