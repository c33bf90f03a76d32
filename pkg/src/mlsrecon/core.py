"""Point-cloud container and bounding boxes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from .errors import EmptyCloud, InvalidParam

Point3 = Tuple[float, float, float]


class PointCloud:
    """An immutable ordered set of 3D points.

    Coordinates are stored as a read-only ``(N, 3)`` float64 array. Every point
    carries a stable integer index (its position in the original input) so
    that a cloud split across workers can be gathered back in input order.
    """

    __slots__ = ("_points", "_index")

    def __init__(self, points, index=None):
        pts = np.array(points, dtype=np.float64, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidParam(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidParam("point coordinates must be finite")
        if index is None:
            idx = np.arange(len(pts), dtype=np.int64)
        else:
            idx = np.array(index, dtype=np.int64, copy=True).reshape(-1)
            if len(idx) != len(pts):
                raise InvalidParam("index length does not match point count")
        pts.flags.writeable = False
        idx.flags.writeable = False
        self._points = pts
        self._index = idx

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def index(self) -> np.ndarray:
        return self._index

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[Point3]:
        for p in self._points:
            yield (float(p[0]), float(p[1]), float(p[2]))

    def __getitem__(self, i) -> Point3:
        p = self._points[i]
        return (float(p[0]), float(p[1]), float(p[2]))

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)})"

    def subset(self, mask_or_indices) -> "PointCloud":
        """Select points by boolean mask or positions, keeping their stable indices."""
        return PointCloud(self._points[mask_or_indices], self._index[mask_or_indices])

    def with_points(self, points) -> "PointCloud":
        """Same indices, new coordinates."""
        return PointCloud(points, self._index)


@dataclass(frozen=True)
class Aabb:
    min: Point3
    max: Point3

    @property
    def extent(self) -> Point3:
        return tuple(hi - lo for lo, hi in zip(self.min, self.max))

    def contains(self, p) -> bool:
        return all(lo <= c <= hi for lo, c, hi in zip(self.min, p, self.max))


def bounding_box(cloud: PointCloud) -> Aabb:
    if len(cloud) == 0:
        raise EmptyCloud("bounding box of an empty cloud is undefined")
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    return Aabb(tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def as_point(p, name: str = "point") -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise InvalidParam(f"{name} must have 3 coordinates")
    if not np.all(np.isfinite(arr)):
        raise InvalidParam(f"{name} must be finite")
    return arr


def concat(clouds) -> PointCloud:
    clouds = list(clouds)
    if not clouds:
        return PointCloud(np.empty((0, 3)))
    return PointCloud(
        np.concatenate([c.points for c in clouds]),
        np.concatenate([c.index for c in clouds]),
    )


def sorted_by_index(cloud: PointCloud) -> PointCloud:
    order = np.argsort(cloud.index, kind="stable")
    return PointCloud(cloud.points[order], cloud.index[order])


class TriangleSoup:
    """Unindexed triangles stored as a ``(T, 3, 3)`` array (triangle, corner, xyz)."""

    __slots__ = ("_tri",)

    def __init__(self, triangles):
        tri = np.array(triangles, dtype=np.float64, copy=True)
        if tri.size == 0:
            tri = tri.reshape(0, 3, 3)
        if tri.ndim != 3 or tri.shape[1:] != (3, 3):
            raise InvalidParam(f"triangles must have shape (T, 3, 3), got {tri.shape}")
        if not np.all(np.isfinite(tri)):
            raise InvalidParam("triangle coordinates must be finite")
        tri.flags.writeable = False
        self._tri = tri

    @property
    def triangles(self) -> np.ndarray:
        return self._tri

    def __len__(self) -> int:
        return len(self._tri)

    def __repr__(self) -> str:
        return f"TriangleSoup(n={len(self)})"
