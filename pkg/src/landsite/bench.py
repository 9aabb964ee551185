"""Per-stage wall-clock benchmark over a frame set.

Each repetition is a full pass over the frames with a fresh registry, so
dedup behavior (and therefore dense-detection cost) is identical across
repetitions. Clustering is timed per invocation, once per frame over the
registry accumulated so far; the report states mean and standard
deviation per stage across all frame passes, in milliseconds.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

from .config import PipelineConfig
from .pipeline import detect_frame, evaluate_costmaps
from .registry import SiteRegistry, cluster_sites

STAGES = ("depth_accuracy", "flatness", "steepness", "energy", "final",
          "dense_detection", "clustering")

STAGE_LABELS = {
    "depth_accuracy": "Depth Accuracy",
    "flatness": "Flatness",
    "steepness": "Steepness",
    "energy": "Energy",
    "final": "Final",
    "dense_detection": "Dense Detection",
    "clustering": "Clustering",
}

_COSTMAP_STAGES = ("depth_accuracy", "flatness", "steepness", "energy", "final")


@dataclass(frozen=True)
class StageStat:
    mean_ms: float
    std_ms: float


@dataclass(eq=False)
class TimingReport:
    stages: dict[str, StageStat]
    total: StageStat
    n_frames: int
    repetitions: int

    def __post_init__(self):
        if any(s.mean_ms < 0 or s.std_ms < 0 for s in self.stages.values()):
            raise ValueError("stage statistics must be non-negative")

    def to_json_obj(self) -> dict:
        return {
            "n_frames": self.n_frames,
            "repetitions": self.repetitions,
            "stages": {name: {"mean_ms": s.mean_ms, "std_ms": s.std_ms}
                       for name, s in self.stages.items()},
            "total": {"mean_ms": self.total.mean_ms, "std_ms": self.total.std_ms},
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_obj(), f, indent=2)
            f.write("\n")

    def to_table(self) -> str:
        """Aligned text table, one row per stage plus the total."""
        rows = [("Algorithm", "Time (mean ± std) ms")]
        rows.append(("Costmap Evaluation", ""))
        for name in _COSTMAP_STAGES:
            s = self.stages[name]
            rows.append((f"  {STAGE_LABELS[name]}", _fmt(s)))
        for name in ("dense_detection", "clustering"):
            s = self.stages[name]
            rows.append((STAGE_LABELS[name], _fmt(s)))
        rows.append(("Total Time", _fmt(self.total)))
        width = max(len(r[0]) for r in rows) + 2
        lines = [rows[0][0].ljust(width) + rows[0][1],
                 "-" * (width + len(rows[0][1]))]
        lines += [name.ljust(width) + val for name, val in rows[1:]]
        return "\n".join(lines)


def _fmt(s: StageStat) -> str:
    return f"{s.mean_ms:8.1f} ± {s.std_ms:5.1f}"


def _mean_std(samples: list[float]) -> StageStat:
    n = len(samples)
    mean = sum(samples) / n
    if n > 1:
        var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    else:
        var = 0.0
    return StageStat(mean_ms=mean, std_ms=math.sqrt(var))


def bench(config: PipelineConfig, frames, repetitions: int = 1) -> TimingReport:
    """Time every stage across ``repetitions`` passes over the frames."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    frames = list(frames)
    if not frames:
        raise ValueError("benchmark needs at least one frame")
    per_stage: dict[str, list[float]] = {name: [] for name in STAGES}
    totals: list[float] = []
    for _ in range(repetitions):
        registry = SiteRegistry(config.dedup_radius_m)
        for frame in frames:
            timings: dict[str, float] = {}
            maps = evaluate_costmaps(config, frame, timings)
            detect_frame(config, frame, maps, registry, timings)
            t0 = time.perf_counter()
            cluster_sites(registry, config.cluster_dist_m, config.cluster_z_m,
                          config.cluster_metric)
            timings["clustering"] = (time.perf_counter() - t0) * 1e3
            for name in STAGES:
                per_stage[name].append(timings[name])
            totals.append(sum(timings[name] for name in STAGES))
    return TimingReport(
        stages={name: _mean_std(per_stage[name]) for name in STAGES},
        total=_mean_std(totals),
        n_frames=len(frames),
        repetitions=repetitions,
    )
