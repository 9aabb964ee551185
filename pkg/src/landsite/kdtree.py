"""Incremental 3-D k-d tree with exact nearest-neighbor queries.

Points are inserted without rebalancing (split axes cycle with depth).
Distances are compared as squares throughout, accumulated in fixed
x, y, z order so results are bit-reproducible; nearest-neighbor ties
break toward the lower insertion index, which requires the search to
keep exploring subtrees at exactly the best distance.
"""

from __future__ import annotations


def _d2(a, b) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return dx * dx + dy * dy + dz * dz


class KDTree:
    def __init__(self):
        self.points: list[tuple[float, float, float]] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._axis: list[int] = []
        self._root = -1

    def __len__(self) -> int:
        return len(self.points)

    def insert(self, point) -> int:
        """Insert a 3-vector; returns its index (== insertion order)."""
        p = (float(point[0]), float(point[1]), float(point[2]))
        idx = len(self.points)
        self.points.append(p)
        self._left.append(-1)
        self._right.append(-1)
        if self._root < 0:
            self._axis.append(0)
            self._root = idx
            return idx
        node = self._root
        while True:
            axis = self._axis[node]
            if p[axis] < self.points[node][axis]:
                child = self._left[node]
                if child < 0:
                    self._left[node] = idx
                    break
            else:
                child = self._right[node]
                if child < 0:
                    self._right[node] = idx
                    break
            node = child
        self._axis.append((self._axis[node] + 1) % 3)
        return idx

    def nearest(self, query) -> tuple[int, float] | None:
        """Exact nearest neighbor: (index, squared distance), or None if empty."""
        if self._root < 0:
            return None
        q = (float(query[0]), float(query[1]), float(query[2]))
        best_idx = -1
        best_d2 = float("inf")
        # stack entries: (node, squared distance to its splitting plane)
        stack = [(self._root, 0.0)]
        while stack:
            node, plane_d2 = stack.pop()
            if node < 0 or plane_d2 > best_d2:
                continue
            p = self.points[node]
            d2 = _d2(q, p)
            if d2 < best_d2 or (d2 == best_d2 and node < best_idx):
                best_idx = node
                best_d2 = d2
            axis = self._axis[node]
            diff = q[axis] - p[axis]
            if diff < 0:
                near, far = self._left[node], self._right[node]
            else:
                near, far = self._right[node], self._left[node]
            if far >= 0:
                stack.append((far, diff * diff))
            if near >= 0:
                stack.append((near, 0.0))
        if best_idx < 0:  # only reachable with non-finite query coordinates
            return None
        return best_idx, best_d2

