"""Run configuration: one table of keys, defaults and parsers.

Config files are ``key=value`` lines (``#`` comments allowed); command-line
flags override file values. Unknown keys are rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from typing import Any, Callable, Dict, Iterable, Mapping, NamedTuple, Optional

from .errors import ConfigError
from .simulator import NoiseSpec


def _bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_int(v: Any) -> Optional[int]:
    if v is None or str(v).strip().lower() in ("", "none", "auto"):
        return None
    return int(v)


class Key(NamedTuple):
    attr: str
    default: Any
    parse: Callable[[Any], Any]
    doc: str


# key -> (attribute, default, parser, help)
TABLE: Dict[str, Key] = {
    "theta": Key("theta", None, _opt_int, "minimum ball flight time in frames; auto = scenario value or 8"),
    "min_possession": Key("min_possession", None, _opt_int, "drop possessions shorter than this; auto = theta, 0 = off"),
    "K": Key("K", 5, int, "features kept per tracklet"),
    "tau": Key("tau", 0.4, float, "association distance threshold"),
    "dim": Key("dim", 64, int, "feature dimension"),
    "Q": Key("queue_size", 8, int, "image queue capacity, Q << T"),
    "L": Key("crop_side", 64, int, "crop side; person 2L x L, ball L x L"),
    "arc.enabled": Key("arc_enabled", True, _bool, "activity region cropping"),
    "arc.dx_frac": Key("arc_dx_frac", 0.1, float, "horizontal margin as a fraction of width"),
    "arc.dy_frac": Key("arc_dy_frac", 0.1, float, "vertical margin as a fraction of height"),
    "arc.refresh_every": Key("arc_refresh_every", 30, int, "forced full-frame detection period"),
    "ci.enabled": Key("ci_enabled", True, _bool, "collision inspection gate"),
    "extractor": Key("extractor", "oracle", str, "feature extractor name"),
    "feature_mode": Key("feature_mode", "crops", str, "crops | full_frame (bench comparison)"),
    "alpha": Key("alpha", 0.0, float, "energy proxy weight per module invocation"),
    "bootstrap_frames": Key("bootstrap_frames", 30, int, "frames allowed for gallery seeding"),
    "seed": Key("seed", 0, int, "noise seed"),
    "tol": Key("tol", 10, int, "event matching tolerance in frames"),
    "noise.fp_rate": Key("fp_rate", 0.0, float, "spurious ball blip rate per frame"),
    "noise.fn_rate": Key("fn_rate", 0.0, float, "missed detection probability"),
    "noise.jitter_px": Key("jitter_px", 0, int, "box coordinate jitter amplitude"),
    "noise.feature_noise": Key("feature_noise", 0.0, float, "per-dimension feature noise"),
    "noise.id_confusion": Key("id_confusion", 0.0, float, "per-frame feature swap probability"),
    "noise.confine": Key("noise_confine", False, _bool, "misses/swaps only inside possessions"),
}


@dataclass(frozen=True)
class RunConfig:
    theta: Optional[int] = None
    min_possession: Optional[int] = None
    K: int = 5
    tau: float = 0.4
    dim: int = 64
    queue_size: int = 8
    crop_side: int = 64
    arc_enabled: bool = True
    arc_dx_frac: float = 0.1
    arc_dy_frac: float = 0.1
    arc_refresh_every: int = 30
    ci_enabled: bool = True
    extractor: str = "oracle"
    feature_mode: str = "crops"
    alpha: float = 0.0
    bootstrap_frames: int = 30
    seed: int = 0
    tol: int = 10
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    jitter_px: int = 0
    feature_noise: float = 0.0
    id_confusion: float = 0.0
    noise_confine: bool = False

    def __post_init__(self):
        if self.theta is not None and self.theta < 1:
            raise ConfigError("theta must be >= 1")
        if self.min_possession is not None and self.min_possession < 0:
            raise ConfigError("min_possession must be >= 0")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.queue_size < 1:
            raise ConfigError("Q must be >= 1")
        if self.crop_side < 1:
            raise ConfigError("L must be >= 1")
        if self.arc_dx_frac < 0 or self.arc_dy_frac < 0:
            raise ConfigError("ARC margins must be >= 0")
        if self.arc_refresh_every < 0:
            raise ConfigError("arc.refresh_every must be >= 0")
        if self.feature_mode not in ("crops", "full_frame"):
            raise ConfigError(f"feature_mode must be crops or full_frame, not {self.feature_mode!r}")
        if self.bootstrap_frames < 1:
            raise ConfigError("bootstrap_frames must be >= 1")
        if self.tol < 0:
            raise ConfigError("tol must be >= 0")
        try:
            self.noise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(
            fp_rate=self.fp_rate,
            fn_rate=self.fn_rate,
            jitter_px=self.jitter_px,
            feature_noise=self.feature_noise,
            id_confusion=self.id_confusion,
            confine_to_possession=self.noise_confine,
        )

    def resolved_theta(self, scenario_theta: Optional[int] = None) -> int:
        if self.theta is not None:
            return self.theta
        return scenario_theta if scenario_theta is not None else 8

    def resolved_min_possession(self, theta: int) -> int:
        return theta if self.min_possession is None else self.min_possession

    def with_values(self, values: Mapping[str, Any]) -> "RunConfig":
        """New config with ``values`` (config-file keys) applied."""
        updates = {}
        for key, raw in values.items():
            if key not in TABLE:
                raise ConfigError(f"unknown config key {key!r}")
            spec = TABLE[key]
            try:
                updates[spec.attr] = spec.parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        return replace(self, **updates)

    def items(self):
        for key, spec in TABLE.items():
            yield key, getattr(self, spec.attr)


def parse_config_lines(lines: Iterable[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value")
        k, _, v = line.partition("=")
        k = k.strip()
        if k not in TABLE:
            raise ConfigError(f"config line {lineno}: unknown key {k!r}")
        out[k] = v.strip()
    return out


def load_config(path) -> Dict[str, str]:
    if not os.path.exists(path):
        raise ConfigError(f"no such config file: {path}")
    with open(path) as fh:
        return parse_config_lines(fh)
