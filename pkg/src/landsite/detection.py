"""Dense per-frame candidate extraction and lifting to world coordinates.

A pixel becomes a candidate when its fused score clears the decision
threshold and the level region around it is large enough to hold the
UAV footprint at that range. Candidates stay dense on purpose; the
global registry and clustering do the sparsification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .costmaps import Costmap, FusionWeights
from .geometry import DepthFrame, project_uav_radius
from .registry import LandingSite

log = logging.getLogger(__name__)


@dataclass(slots=True)
class CandidateSite:
    """A pixel-level detection in one frame."""

    x: int
    y: int
    depth: float
    score: float
    flat_radius_px: float
    frame_id: int


def candidate_indices(decision: Costmap, flat_raw: Costmap, frame: DepthFrame,
                      weights: FusionWeights, uav_radius: float,
                      safety_factor: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(ys, xs) of all pixels passing the score and footprint tests, raster order."""
    if decision.shape != frame.shape or flat_raw.shape != frame.shape:
        raise ValueError("costmaps are not aligned with the frame")
    ok = decision.valid & flat_raw.valid & frame.valid
    required = np.zeros_like(frame.depth)
    if ok.any():
        required[ok] = safety_factor * project_uav_radius(
            uav_radius, frame.depth[ok], frame.intrinsics)
    passing = (ok & (decision.values >= weights.decision_threshold)
               & (flat_raw.values >= required))
    return np.nonzero(passing)


def dense_candidates(decision: Costmap, flat_raw: Costmap, frame: DepthFrame,
                     weights: FusionWeights, uav_radius: float,
                     safety_factor: float = 1.0) -> list[CandidateSite]:
    """All pixels passing both the score and the footprint test.

    ``flat_raw`` must be the un-normalized flatness map (pixels). The
    footprint test requires flat_raw >= safety_factor * projected UAV
    radius at the pixel's depth. Candidates are emitted in raster order.
    """
    ys, xs = candidate_indices(decision, flat_raw, frame, weights, uav_radius,
                               safety_factor)
    return build_candidates(xs, ys, frame, decision, flat_raw)


def build_candidates(xs: np.ndarray, ys: np.ndarray, frame: DepthFrame,
                     decision: Costmap, flat_raw: Costmap) -> list[CandidateSite]:
    frame_id = frame.frame_id
    return [
        CandidateSite(x, y, d, s, f, frame_id)
        for x, y, d, s, f in zip(
            xs.tolist(), ys.tolist(), frame.depth[ys, xs].tolist(),
            decision.values[ys, xs].tolist(), flat_raw.values[ys, xs].tolist())
    ]


def world_positions(xs: np.ndarray, ys: np.ndarray, depths: np.ndarray,
                    frame: DepthFrame) -> np.ndarray:
    """Back-project pixel batches and lift them to the world frame, (N, 3)."""
    intr = frame.intrinsics
    p_cam = np.empty((len(xs), 3))
    p_cam[:, 0] = depths * (np.asarray(xs, dtype=np.float64) - intr.cx) / intr.fx
    p_cam[:, 1] = depths * (np.asarray(ys, dtype=np.float64) - intr.cy) / intr.fy
    p_cam[:, 2] = depths
    return frame.pose_world_from_camera.apply(p_cam)


def candidates_to_world(candidates: list[CandidateSite],
                        frame: DepthFrame) -> tuple[list[LandingSite], int]:
    """Lift candidates to world-frame landing sites.

    Candidates at invalid pixels are skipped; returns (sites, skipped).
    """
    if not candidates:
        return [], 0
    h, w = frame.shape
    xs = np.array([c.x for c in candidates])
    ys = np.array([c.y for c in candidates])
    usable = (0 <= xs) & (xs < w) & (0 <= ys) & (ys < h)
    usable[usable] &= frame.valid[ys[usable], xs[usable]]
    skipped = int((~usable).sum())
    if skipped:
        log.warning("skipped %d candidate(s) at invalid pixels", skipped)
    xs, ys = xs[usable], ys[usable]
    world = world_positions(xs, ys, frame.depth[ys, xs], frame)
    kept = (c for c, u in zip(candidates, usable) if u)
    sites = [
        LandingSite(position=pos, score=c.score, frame_id=c.frame_id,
                    timestamp=frame.timestamp)
        for pos, c in zip(world, kept)
    ]
    return sites, skipped
