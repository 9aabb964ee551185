"""Global world-frame site registry and its agglomerative clustering.

The registry keeps every accepted landing site in a k-d tree and refuses
new sites that fall within ``dedup_radius`` of an existing one, so the
stored set is always sparse. Clustering is single linkage realized as
connected components of the pairwise linkability relation: two sites
link when their horizontal separation is within the distance threshold
and their height difference within the z threshold (a config switch
makes the distance criterion fully 3-D instead).

The canonical linkability arithmetic is
``dx*dx + dy*dy <= dist_th*dist_th and abs(dz) <= z_th``
(plus ``+ dz*dz`` on the left for the 3-D metric); dedup comparisons use
squared distances. Any reimplementation that follows the same forms
reproduces the partitions bit-for-bit.

One pipeline thread owns the registry for writes; reads may interleave
between insertions and the object can be handed across threads freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kdtree import KDTree


@dataclass(frozen=True, eq=False)
class LandingSite:
    """A scored world-frame landing point."""

    position: np.ndarray
    score: float
    frame_id: int
    timestamp: float

    def __post_init__(self):
        p = np.array(self.position, dtype=np.float64).reshape(3)
        p.flags.writeable = False
        object.__setattr__(self, "position", p)

    def to_json_obj(self) -> dict:
        return {"x": float(self.position[0]), "y": float(self.position[1]),
                "z": float(self.position[2]), "score": float(self.score),
                "frame_id": int(self.frame_id),
                "timestamp": float(self.timestamp)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "LandingSite":
        return cls(position=np.array([obj["x"], obj["y"], obj["z"]]),
                   score=float(obj["score"]), frame_id=int(obj["frame_id"]),
                   timestamp=float(obj["timestamp"]))


@dataclass(frozen=True, eq=False)
class ClusterSite:
    """Centroid summary of one cluster of landing sites."""

    centroid: np.ndarray
    mean_score: float
    member_count: int

    def to_json_obj(self) -> dict:
        return {"cx": float(self.centroid[0]), "cy": float(self.centroid[1]),
                "cz": float(self.centroid[2]),
                "mean_score": float(self.mean_score),
                "members": int(self.member_count)}


class SiteRegistry:
    """Deduplicated global list of landing sites over a k-d tree."""

    def __init__(self, dedup_radius: float):
        if not dedup_radius > 0:
            raise ValueError("dedup radius must be positive")
        self.dedup_radius = float(dedup_radius)
        self.sites: list[LandingSite] = []
        self._tree = KDTree()

    def __len__(self) -> int:
        return len(self.sites)

    def positions(self) -> np.ndarray:
        if not self.sites:
            return np.zeros((0, 3))
        return np.array([s.position for s in self.sites])

    def insert(self, site: LandingSite) -> bool:
        """Insert unless an existing site lies strictly closer than the radius."""
        if not np.all(np.isfinite(site.position)):
            raise ValueError("site position must be finite")
        hit = self._tree.nearest(site.position)
        if hit is not None:
            _, d2 = hit
            if d2 < self.dedup_radius * self.dedup_radius:
                return False
        self._accept(site)
        return True

    def insert_batch(self, sites: list[LandingSite]) -> list[bool]:
        """Insert many sites with semantics identical to sequential insert().

        Equivalent to ``[self.insert(s) for s in sites]``, vectorized.
        """
        if not sites:
            return []
        pos = np.array([s.position for s in sites])
        return self._insert_positions(pos, lambda i: sites[i])

    def insert_positions(self, positions: np.ndarray, scores: np.ndarray,
                         frame_id: int, timestamp: float) -> list[bool]:
        """Batch-insert raw position/score arrays from one frame.

        Same dedup semantics as sequential insert(); LandingSite records
        are only materialized for accepted positions.
        """
        pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        if len(pos) == 0:
            return []

        def make(i: int) -> LandingSite:
            return LandingSite(position=pos[i], score=float(scores[i]),
                               frame_id=frame_id, timestamp=timestamp)

        return self._insert_positions(pos, make)

    def _insert_positions(self, pos: np.ndarray, make_site) -> list[bool]:
        """Greedy batch dedup, exactly equivalent to inserting in order.

        A candidate is accepted iff it is not within the dedup radius of
        any previously accepted site (existing or earlier in the batch);
        taking the first surviving candidate and discarding its ball
        realizes exactly that order.
        """
        if not np.all(np.isfinite(pos)):
            raise ValueError("site position must be finite")
        flags = [False] * len(pos)
        r2 = self.dedup_radius * self.dedup_radius
        alive = np.ones(len(pos), dtype=bool)
        existing = self.positions()
        if len(existing):
            lo = pos.min(axis=0) - self.dedup_radius
            hi = pos.max(axis=0) + self.dedup_radius
            near = existing[np.all((existing >= lo) & (existing <= hi), axis=1)]
            if len(near):
                for chunk in range(0, len(pos), 8192):
                    block = pos[chunk : chunk + 8192]
                    d2 = _pairwise_d2(block, near)
                    alive[chunk : chunk + 8192] &= ~(d2 < r2).any(axis=1)
        order = np.nonzero(alive)[0]
        while order.size:
            first = int(order[0])
            flags[first] = True
            self._accept(make_site(first))
            d2 = _pairwise_d2(pos[order], pos[first][None, :])[:, 0]
            order = order[~(d2 < r2)]
        return flags

    def _accept(self, site: LandingSite) -> None:
        self._tree.insert(site.position)
        self.sites.append(site)

    def nearest(self, query) -> tuple[LandingSite, float] | None:
        """Closest stored site and its Euclidean distance, or None if empty.

        Exact; ties resolve to the earliest-inserted site.
        """
        hit = self._tree.nearest(query)
        if hit is None:
            return None
        idx, d2 = hit
        return self.sites[idx], float(np.sqrt(d2))

    def to_json_obj(self) -> dict:
        return {"dedup_radius_m": self.dedup_radius,
                "sites": [s.to_json_obj() for s in self.sites]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SiteRegistry":
        reg = cls(float(obj["dedup_radius_m"]))
        for rec in obj["sites"]:
            reg._accept(LandingSite.from_json_obj(rec))
        return reg

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_obj(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "SiteRegistry":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json_obj(json.load(f))


def _pairwise_d2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distances between rows of a (N, 3) and b (M, 3), shape (N, M).

    Accumulated per-component in x, y, z order to match the scalar path.
    """
    dx = a[:, 0][:, None] - b[:, 0][None, :]
    dy = a[:, 1][:, None] - b[:, 1][None, :]
    dz = a[:, 2][:, None] - b[:, 2][None, :]
    return dx * dx + dy * dy + dz * dz


def cluster_sites(registry: SiteRegistry, dist_th: float, z_th: float,
                  metric: str = "xy") -> list[ClusterSite]:
    """Single-linkage clusters of the registry under the dual threshold.

    Clusters are the connected components of the linkability graph, so the
    partition is independent of site ordering. Output is sorted by mean
    score descending, ties by member count descending, then centroid
    lexicographic.
    """
    if not (dist_th > 0 and z_th > 0):
        raise ValueError("clustering thresholds must be positive")
    if metric not in ("xy", "xyz"):
        raise ValueError(f"unknown cluster metric {metric!r}")
    n = len(registry)
    if n == 0:
        return []
    pos = registry.positions()
    scores = np.array([s.score for s in registry.sites])

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist2 = dist_th * dist_th
    for start in range(0, n, 512):
        block = pos[start : start + 512]
        dx = block[:, 0][:, None] - pos[:, 0][None, :]
        dy = block[:, 1][:, None] - pos[:, 1][None, :]
        dz = block[:, 2][:, None] - pos[:, 2][None, :]
        xy2 = dx * dx + dy * dy
        if metric == "xy":
            link = (xy2 <= dist2) & (np.abs(dz) <= z_th)
        else:
            link = (xy2 + dz * dz <= dist2) & (np.abs(dz) <= z_th)
        rows, cols = np.nonzero(link)
        for r, c in zip(rows, cols):
            i, j = find(start + int(r)), find(int(c))
            if i != j:
                if i < j:
                    parent[j] = i
                else:
                    parent[i] = j

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for members in groups.values():
        idx = np.array(members)
        centroid = pos[idx].mean(axis=0)
        clusters.append(ClusterSite(centroid=centroid,
                                    mean_score=float(scores[idx].mean()),
                                    member_count=len(members)))
    clusters.sort(key=lambda c: (-c.mean_score, -c.member_count,
                                 c.centroid[0], c.centroid[1], c.centroid[2]))
    return clusters
