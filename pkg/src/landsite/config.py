"""Pipeline configuration with named profiles.

Field names carry explicit units (_m, _px, _deg) because unit slips are
the dominant failure mode in this kind of geometry code. Two profiles
ship: "sim" for clean rendered depth and "real" for noisy stereo depth;
they differ in the fusion weights, the decision threshold and the
cluster height tolerance.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from .costmaps import FusionWeights
from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    profile: str
    weight_depth_confidence: float
    weight_flatness: float
    weight_steepness: float
    weight_energy: float
    decision_threshold: float
    slope_tolerance_deg: float
    canny_low_m: float
    canny_high_m: float
    smoothing_window_px: int
    uav_radius_m: float
    safety_factor: float
    dedup_radius_m: float
    cluster_dist_m: float
    cluster_z_m: float
    cluster_metric: str
    d_min_m: float
    d_max_m: float

    def __post_init__(self):
        self.fusion_weights()  # validates weights, threshold, tolerance
        if not (0 < self.canny_low_m <= self.canny_high_m):
            raise ConfigError("need 0 < canny_low_m <= canny_high_m")
        if self.smoothing_window_px < 1 or self.smoothing_window_px % 2 == 0:
            raise ConfigError("smoothing_window_px must be odd and >= 1")
        for name in ("uav_radius_m", "safety_factor", "dedup_radius_m",
                     "cluster_dist_m", "cluster_z_m", "d_min_m"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.d_min_m < self.d_max_m:
            raise ConfigError("need d_min_m < d_max_m")
        if self.cluster_metric not in ("xy", "xyz"):
            raise ConfigError("cluster_metric must be 'xy' or 'xyz'")

    def fusion_weights(self) -> FusionWeights:
        return FusionWeights(
            depth_confidence=self.weight_depth_confidence,
            flatness=self.weight_flatness,
            steepness=self.weight_steepness,
            energy=self.weight_energy,
            decision_threshold=self.decision_threshold,
            slope_tolerance=math.radians(self.slope_tolerance_deg),
        )

    def to_json_obj(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        missing = names - set(obj)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        return cls(**obj)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_obj(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_json_obj(obj)


_COMMON = dict(
    slope_tolerance_deg=15.0,
    canny_low_m=0.05,
    canny_high_m=0.20,
    smoothing_window_px=3,
    uav_radius_m=0.13,
    safety_factor=1.0,
    dedup_radius_m=0.5,
    cluster_dist_m=0.5,
    cluster_metric="xy",
    d_min_m=0.05,
    d_max_m=20.0,
)

PROFILES: dict[str, PipelineConfig] = {
    "sim": PipelineConfig(
        profile="sim",
        weight_depth_confidence=0.05,
        weight_flatness=0.4,
        weight_steepness=0.4,
        weight_energy=0.15,
        decision_threshold=0.72,
        cluster_z_m=0.01,
        **_COMMON,
    ),
    "real": PipelineConfig(
        profile="real",
        weight_depth_confidence=0.15,
        weight_flatness=0.35,
        weight_steepness=0.4,
        weight_energy=0.1,
        decision_threshold=0.7,
        cluster_z_m=0.05,
        **_COMMON,
    ),
}


def get_profile(name: str) -> PipelineConfig:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from "
                          f"{sorted(PROFILES)}") from None
