"""Analytic scene rendering with exact ground truth.

Scenes are built from four primitive kinds (ground plane, tilted plane,
box, sphere) and rendered by per-pixel ray casting, which yields depth
frames plus analytic surface normals, a per-pixel primitive id and a
safe-landing mask for oracle-style testing. Boxes default to axis
aligned but accept an optional rotation so cluttered scenes can contain
tilted slabs.

Rendering is deterministic: with the noise knob off, the same scene,
intrinsics and pose produce bit-identical frames on every run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics, DepthFrame, Pose, camera_pose, \
    rotation_x, rotation_z

D_MIN_DEFAULT = 0.05
D_MAX_DEFAULT = 20.0

_EPS = 1e-12


@dataclass(frozen=True)
class GroundPlane:
    z: float
    safe: bool = False


@dataclass(frozen=True, eq=False)
class TiltedPlane:
    point: np.ndarray
    normal: np.ndarray
    safe: bool = False

    def __post_init__(self):
        p = np.array(self.point, dtype=np.float64).reshape(3)
        n = np.array(self.normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(n)
        if norm < _EPS:
            raise ValueError("plane normal must be nonzero")
        n = n / norm
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True, eq=False)
class Box:
    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray | None = None
    safe: bool = False

    def __post_init__(self):
        c = np.array(self.center, dtype=np.float64).reshape(3)
        h = np.array(self.half_extents, dtype=np.float64).reshape(3)
        if np.any(h <= 0):
            raise ValueError("box half extents must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)
        if self.rotation is not None:
            r = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
            object.__setattr__(self, "rotation", r)


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float
    safe: bool = False

    def __post_init__(self):
        c = np.array(self.center, dtype=np.float64).reshape(3)
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")
        object.__setattr__(self, "center", c)


Primitive = GroundPlane | TiltedPlane | Box | Sphere


@dataclass
class SceneSpec:
    """A list of primitives plus the depth-noise knob and its seed."""

    primitives: tuple
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.primitives:
            raise ValueError("scene needs at least one primitive")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        self.primitives = tuple(self.primitives)


@dataclass(eq=False)
class GroundTruth:
    """Analytic per-pixel truth for a rendered frame.

    Normals are world-frame unit vectors oriented toward the camera (so
    they compare directly against estimated normals); prim_id is the
    index into the scene's primitive list (-1 where nothing was hit);
    safe_mask marks pixels whose hit primitive carries the safe-pad
    annotation.
    """

    normals: np.ndarray
    prim_id: np.ndarray
    safe_mask: np.ndarray


def _intersect_plane(point, normal, origin, dirs):
    denom = dirs @ normal
    offset = float(normal @ (point - origin))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = offset / denom
    t = np.where((np.abs(denom) > _EPS) & (t > _EPS), t, np.inf)
    n = np.broadcast_to(normal, dirs.shape)
    return t, n


def _intersect_sphere(center, radius, origin, dirs):
    oc = origin - center
    a = np.sum(dirs * dirs, axis=-1)
    b = 2.0 * (dirs @ oc)
    c = float(oc @ oc) - radius * radius
    disc = b * b - 4.0 * a * c
    hit = disc >= 0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
    t = np.where(t_near > _EPS, t_near, t_far)
    t = np.where(hit & (t > _EPS), t, np.inf)
    t_safe = np.where(np.isfinite(t), t, 0.0)
    points = origin + t_safe[..., None] * dirs
    n = (points - center) / radius
    return t, n


def _intersect_box(box: Box, origin, dirs):
    if box.rotation is not None:
        rot = box.rotation
        o = rot.T @ (origin - box.center)
        d = dirs @ rot
    else:
        rot = None
        o = origin - box.center
        d = dirs
    h = box.half_extents
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
    t1 = (-h - o) * inv
    t2 = (h - o) * inv
    # Zero direction components: inside the slab -> (-inf, inf), else miss.
    parallel = np.abs(d) < _EPS
    inside = np.abs(o) <= h
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    t_enter = lo.max(axis=-1)
    t_exit = hi.min(axis=-1)
    hit = (t_exit >= t_enter) & (t_enter > _EPS)
    t = np.where(hit, t_enter, np.inf)
    axis = lo.argmax(axis=-1)
    sign = -np.sign(np.take_along_axis(d, axis[..., None], axis=-1)[..., 0])
    n_local = np.zeros(d.shape)
    np.put_along_axis(n_local, axis[..., None], sign[..., None], axis=-1)
    n = n_local @ rot.T if rot is not None else n_local
    return t, n


def _camera_inside(prim: Primitive, origin) -> bool:
    if isinstance(prim, Sphere):
        return bool(np.linalg.norm(origin - prim.center) <= prim.radius)
    if isinstance(prim, Box):
        o = origin - prim.center
        if prim.rotation is not None:
            o = prim.rotation.T @ o
        return bool(np.all(np.abs(o) <= prim.half_extents))
    return False


def render_depth(scene: SceneSpec, intrinsics: CameraIntrinsics, pose: Pose,
                 d_min: float = D_MIN_DEFAULT, d_max: float = D_MAX_DEFAULT,
                 frame_id: int = 0, timestamp: float = 0.0,
                 ) -> tuple[DepthFrame, GroundTruth]:
    """Ray-cast a scene into a depth frame plus its ground truth.

    The ray parameter equals z-depth by construction, and depths outside
    [d_min, d_max] (after optional noise) are marked invalid. Raises if
    the camera sits inside a solid.
    """
    origin = pose.translation
    for prim in scene.primitives:
        if _camera_inside(prim, origin):
            raise ValueError("camera must be outside all solids")

    u = (np.arange(intrinsics.width, dtype=np.float64) - intrinsics.cx) / intrinsics.fx
    v = (np.arange(intrinsics.height, dtype=np.float64) - intrinsics.cy) / intrinsics.fy
    dirs_cam = np.empty((intrinsics.height, intrinsics.width, 3))
    dirs_cam[..., 0] = u[None, :]
    dirs_cam[..., 1] = v[:, None]
    dirs_cam[..., 2] = 1.0
    dirs = dirs_cam @ pose.rotation.T

    best_t = np.full(dirs.shape[:2], np.inf)
    best_n = np.zeros(dirs.shape)
    prim_id = np.full(dirs.shape[:2], -1, dtype=np.int32)
    for idx, prim in enumerate(scene.primitives):
        if isinstance(prim, GroundPlane):
            t, n = _intersect_plane(np.array([0.0, 0.0, prim.z]),
                                    np.array([0.0, 0.0, 1.0]), origin, dirs)
        elif isinstance(prim, TiltedPlane):
            t, n = _intersect_plane(prim.point, prim.normal, origin, dirs)
        elif isinstance(prim, Sphere):
            t, n = _intersect_sphere(prim.center, prim.radius, origin, dirs)
        else:
            t, n = _intersect_box(prim, origin, dirs)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_n = np.where(closer[..., None], n, best_n)
        prim_id = np.where(closer, np.int32(idx), prim_id)

    depth = np.where(np.isfinite(best_t), best_t, 0.0)
    if scene.noise_sigma > 0:
        rng = np.random.default_rng(scene.seed)
        depth = depth + rng.normal(0.0, scene.noise_sigma, depth.shape)
    valid = np.isfinite(best_t) & (depth >= d_min) & (depth <= d_max)
    depth = np.where(valid, depth, 0.0)

    # Orient truth normals toward the camera, matching the estimator.
    toward = np.sum(best_n * dirs, axis=-1)
    normals = np.where((toward > 0.0)[..., None], -best_n, best_n)
    normals = np.where(valid[..., None], normals, 0.0)
    prim_id = np.where(valid, prim_id, np.int32(-1))
    safe_ids = np.array([i for i, p in enumerate(scene.primitives) if p.safe],
                        dtype=np.int32)
    safe_mask = valid & np.isin(prim_id, safe_ids)

    frame = DepthFrame(depth=depth, valid=valid, intrinsics=intrinsics,
                       pose_world_from_camera=pose, frame_id=frame_id,
                       timestamp=timestamp)
    return frame, GroundTruth(normals=normals, prim_id=prim_id,
                              safe_mask=safe_mask)


def edge_mask_from_prim_ids(truth: GroundTruth) -> np.ndarray:
    """Pixels 4-adjacent to a different primitive id (or to invalid space)."""
    pid = truth.prim_id
    mask = np.zeros(pid.shape, dtype=bool)
    mask[:, :-1] |= pid[:, :-1] != pid[:, 1:]
    mask[:, 1:] |= pid[:, 1:] != pid[:, :-1]
    mask[:-1, :] |= pid[:-1, :] != pid[1:, :]
    mask[1:, :] |= pid[1:, :] != pid[:-1, :]
    return mask


# --- canonical scene set -----------------------------------------------------

FLAT_PAD = "FLAT_PAD"
STEEP_WALL = "STEEP_WALL"
TREE = "TREE"
ROOF_EDGE = "ROOF_EDGE"
RUBBLE = "RUBBLE"

# Nadir camera heights (meters) used by canonical_camera().
CANONICAL_HEIGHTS = {
    FLAT_PAD: 5.0,
    STEEP_WALL: 5.0,
    TREE: 5.0,
    ROOF_EDGE: 8.0,
    RUBBLE: 5.5,
}

_SLOPE_25 = math.radians(25.0)


def default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fx=525.0, fy=525.0, cx=319.5, cy=239.5,
                            width=640, height=480)


def canonical_scenes(seed: int = 7) -> dict[str, SceneSpec]:
    """The named test scenes.

    FLAT_PAD: open ground with one raised landable pad.
    STEEP_WALL: a single 25-degree slope, steeper than any tolerable site.
    TREE: a canopy sphere over that same slope, so nothing is landable.
    ROOF_EDGE: a flat roof next to a drop to the ground.
    RUBBLE: cluttered boxes at random tilts around a landable pad, with a
    25-degree slab, a canopy sphere and a tall block mixed in.
    """
    slope_normal = np.array([0.0, -math.sin(_SLOPE_25), math.cos(_SLOPE_25)])
    scenes = {
        # The pad is a thin slab well above the ground: its silhouette is a
        # sharp occluded drop, which is what depth-edge detection keys on
        # (a short block's visible side reads as a smooth ramp instead).
        FLAT_PAD: SceneSpec(primitives=(
            GroundPlane(z=0.0),
            Box(center=(0.0, 0.0, 0.79), half_extents=(1.3, 1.3, 0.01),
                safe=True),
        )),
        STEEP_WALL: SceneSpec(primitives=(
            TiltedPlane(point=(0.0, 0.0, 0.0), normal=slope_normal),
        )),
        TREE: SceneSpec(primitives=(
            TiltedPlane(point=(0.0, 0.0, 0.0), normal=slope_normal),
            Sphere(center=(0.6, -0.5, 1.1), radius=0.3),
        )),
        ROOF_EDGE: SceneSpec(primitives=(
            GroundPlane(z=0.0),
            Box(center=(-1.1, 0.0, 1.5), half_extents=(1.6, 2.6, 1.5), safe=True),
        )),
        RUBBLE: _rubble_scene(seed),
    }
    return scenes


def _rubble_scene(seed: int) -> SceneSpec:
    """Seeded clutter around a guaranteed-landable pad."""
    rng = np.random.default_rng(seed)
    pad_center = np.array([1.4, 0.9])
    prims: list[Primitive] = [
        GroundPlane(z=0.0),
        # Raised slab pad: sharp drop at the silhouette (see FLAT_PAD note).
        Box(center=(pad_center[0], pad_center[1], 0.69),
            half_extents=(1.0, 1.0, 0.01), safe=True),
        # A slab tilted exactly 25 degrees: steeper than tolerable.
        Box(center=(-1.5, 1.2, 0.55), half_extents=(0.9, 0.9, 0.08),
            rotation=rotation_x(_SLOPE_25)),
        # Canopy sphere and a taller block that owns the depth minimum.
        Sphere(center=(-1.6, -1.1, 0.9), radius=0.3),
        Box(center=(0.3, -1.5, 0.9), half_extents=(0.45, 0.45, 0.9)),
    ]
    placed = 0
    while placed < 8:
        cx, cy = rng.uniform(-2.6, 2.6, size=2)
        if np.hypot(cx - pad_center[0], cy - pad_center[1]) < 1.9:
            continue
        half = rng.uniform(0.15, 0.45, size=3)
        yaw = rng.uniform(0.0, math.pi)
        tilt = rng.uniform(math.radians(18.0), math.radians(35.0))
        rot = rotation_z(yaw) @ rotation_x(tilt)
        prims.append(Box(center=(cx, cy, half[2] * 0.8),
                         half_extents=half, rotation=rot))
        placed += 1
    return SceneSpec(primitives=tuple(prims), seed=seed)


def canonical_camera(name: str, position_xy=(0.0, 0.0)) -> Pose:
    """Nadir camera pose at the canonical height for a named scene."""
    height = CANONICAL_HEIGHTS[name]
    return camera_pose((position_xy[0], position_xy[1], height))


# --- JSON interchange --------------------------------------------------------

def scene_to_json_obj(scene: SceneSpec) -> dict:
    prims = []
    for p in scene.primitives:
        if isinstance(p, GroundPlane):
            prims.append({"type": "ground_plane", "z_m": p.z, "safe": p.safe})
        elif isinstance(p, TiltedPlane):
            prims.append({"type": "tilted_plane", "point_m": list(p.point),
                          "normal": list(p.normal), "safe": p.safe})
        elif isinstance(p, Sphere):
            prims.append({"type": "sphere", "center_m": list(p.center),
                          "radius_m": p.radius, "safe": p.safe})
        else:
            rot = None if p.rotation is None else [list(row) for row in p.rotation]
            prims.append({"type": "box", "center_m": list(p.center),
                          "half_extents_m": list(p.half_extents),
                          "rotation": rot, "safe": p.safe})
    return {"primitives": prims, "noise_sigma_m": scene.noise_sigma,
            "seed": scene.seed}


def scene_from_json_obj(obj: dict) -> SceneSpec:
    prims: list[Primitive] = []
    for rec in obj["primitives"]:
        kind = rec["type"]
        safe = bool(rec.get("safe", False))
        if kind == "ground_plane":
            prims.append(GroundPlane(z=float(rec["z_m"]), safe=safe))
        elif kind == "tilted_plane":
            prims.append(TiltedPlane(point=rec["point_m"], normal=rec["normal"],
                                     safe=safe))
        elif kind == "sphere":
            prims.append(Sphere(center=rec["center_m"],
                                radius=float(rec["radius_m"]), safe=safe))
        elif kind == "box":
            rot = rec.get("rotation")
            prims.append(Box(center=rec["center_m"],
                             half_extents=rec["half_extents_m"],
                             rotation=None if rot is None else np.array(rot),
                             safe=safe))
        else:
            raise ValueError(f"unknown primitive type {kind!r}")
    return SceneSpec(primitives=tuple(prims),
                     noise_sigma=float(obj.get("noise_sigma_m", 0.0)),
                     seed=int(obj.get("seed", 0)))


def save_scene(path, scene: SceneSpec) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scene_to_json_obj(scene), f, indent=2)
        f.write("\n")


def load_scene(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as f:
        return scene_from_json_obj(json.load(f))
