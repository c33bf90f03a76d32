"""Exact radius and nearest-neighbour queries.

The tree itself is scipy's ``cKDTree``; it only proposes candidates. Inclusion
and ranking are decided here with one distance formula (see :func:`distances`)
so results do not depend on how the tree was built or which subset of a cloud
it covers. Radius results come back ordered by stable point index and nearest
ties go to the smallest index.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud, as_point
from .errors import EmptyCloud, InvalidParam

# candidate radius inflation; far above the rounding of a 3-term squared norm
_SLACK = 1e-9


def distances(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    d = points - center
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])


def _check_radius(r):
    if not (isinstance(r, (int, float, np.floating)) and math.isfinite(r) and r > 0):
        raise InvalidParam(f"radius must be positive and finite, got {r!r}")


class SpatialIndex:
    """Read-only k-d tree over a :class:`PointCloud`.

    Returned indices are the cloud's stable indices, not storage positions,
    unless a ``*_positions`` method says otherwise.
    """

    def __init__(self, cloud: PointCloud, leaf_size: int = 16):
        if leaf_size < 1:
            raise InvalidParam("leaf_size must be >= 1")
        self.cloud = cloud
        self.leaf_size = leaf_size
        self._pts = cloud.points
        self._ids = cloud.index
        self._tree = cKDTree(self._pts, leafsize=leaf_size) if len(cloud) else None

    def __len__(self):
        return len(self._pts)

    def radius_positions(self, center, r: float) -> np.ndarray:
        """Storage positions of points within ``r`` of ``center``, sorted by stable index."""
        _check_radius(r)
        c = as_point(center, "center")
        if self._tree is None:
            return np.empty(0, dtype=np.int64)
        cand = np.asarray(self._tree.query_ball_point(c, r * (1 + _SLACK)), dtype=np.int64)
        return self._filter(cand, c, r)

    def radius_positions_many(self, centers: np.ndarray, r: float, anchors=None, reach=None) -> list:
        """Per-centre :meth:`radius_positions`.

        With ``anchors`` and ``reach`` each result is further limited to points
        within ``reach`` of the matching anchor.
        """
        _check_radius(r)
        centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
        if self._tree is None:
            return [np.empty(0, dtype=np.int64) for _ in range(len(centers))]
        cands = self._tree.query_ball_point(centers, r * (1 + _SLACK))
        if anchors is None:
            return [self._filter(np.asarray(cand, dtype=np.int64), c, r)
                    for cand, c in zip(cands, centers)]
        _check_radius(reach)
        anchors = np.asarray(anchors, dtype=np.float64).reshape(-1, 3)
        out = []
        for cand, c, a in zip(cands, centers, anchors):
            cand = np.asarray(cand, dtype=np.int64)
            if cand.size:
                cand = cand[distances(self._pts[cand], a) <= reach]
            out.append(self._filter(cand, c, r))
        return out

    def _filter(self, cand, c, r):
        if cand.size == 0:
            return cand
        keep = cand[distances(self._pts[cand], c) <= r]
        return keep[np.argsort(self._ids[keep], kind="stable")]

    def radius_query(self, center, r: float) -> list:
        """``[(index, distance), ...]`` for every point with distance <= r."""
        c = as_point(center, "center")
        pos = self.radius_positions(c, r)
        d = distances(self._pts[pos], c)
        return [(int(i), float(x)) for i, x in zip(self._ids[pos], d)]

    def nearest(self, query) -> tuple:
        q = as_point(query, "query")
        idx, dist = self.nearest_many(q[None, :])
        return int(idx[0]), float(dist[0])

    def nearest_many(self, queries) -> tuple:
        """Vectorised :meth:`nearest`; returns ``(indices, distances)`` arrays."""
        if self._tree is None:
            raise EmptyCloud("nearest-neighbour query on an empty cloud")
        qs = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(qs)):
            raise InvalidParam("queries must be finite")
        _, first = self._tree.query(qs, k=1)
        d0 = distances(self._pts[first], qs)
        # re-scan a slightly larger ball so ties and tree rounding are settled here
        balls = self._tree.query_ball_point(qs, d0 * (1 + _SLACK) + 1e-300)
        out_idx = np.empty(len(qs), dtype=np.int64)
        out_d = np.empty(len(qs), dtype=np.float64)
        for k, (cand, q) in enumerate(zip(balls, qs)):
            cand = np.asarray(cand, dtype=np.int64)
            if cand.size == 0:
                cand = np.array([first[k]], dtype=np.int64)
            dc = distances(self._pts[cand], q)
            ids = self._ids[cand]
            best = np.lexsort((ids, dc))[0]
            out_idx[k] = ids[best]
            out_d[k] = dc[best]
        return out_idx, out_d
