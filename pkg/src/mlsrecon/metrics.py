"""Deviation of a cloud from a reference surface.

For each point the deviation is its distance to the nearest reference point
(or, with a mesh, to the nearest triangle). Reports carry the mean distance,
the RMS distance (reported as ``std_deviation``) and the maximum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud, TriangleSoup
from .errors import EmptyCloud, EmptyMesh
from .spatial import SpatialIndex

_ULP_SLACK = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class DeviationReport:
    n: int
    mean_distance: float
    std_deviation: float
    max_distance: float
    distances: Optional[np.ndarray] = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_distance": self.mean_distance,
            "std_deviation": self.std_deviation,
            "max_distance": self.max_distance,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def summarize(distances, keep: bool = False) -> DeviationReport:
    """Aggregate per-point distances in index order."""
    e = np.asarray(distances, dtype=np.float64).reshape(-1)
    n = len(e)
    if n == 0:
        raise EmptyCloud("no distances to summarize")
    mean = math.fsum(e) / n
    mx = float(e.max())
    # scaled by the max so squares neither underflow nor overflow
    rms = mx * math.sqrt(math.fsum((e / mx) ** 2) / n) if mx > 0 else 0.0
    # power-mean ordering; rounding may flip an exact tie by an ulp or two
    if rms < mean:
        if mean - rms > _ULP_SLACK * mean:
            raise ArithmeticError(f"RMS {rms!r} below mean {mean!r}")
        rms = mean
    if mx < rms:
        if rms - mx > _ULP_SLACK * rms:
            raise ArithmeticError(f"max {mx!r} below RMS {rms!r}")
        mx = rms
    return DeviationReport(n, mean, rms, mx, e.copy() if keep else None)


def deviation(cloud: PointCloud, reference: PointCloud, keep_distances: bool = False) -> DeviationReport:
    if len(cloud) == 0 or len(reference) == 0:
        raise EmptyCloud("deviation needs two non-empty clouds")
    _, d = SpatialIndex(reference).nearest_many(cloud.points)
    return summarize(d, keep_distances)


def closest_points_on_triangles(p, a, b, c) -> np.ndarray:
    """Closest point to ``p`` on triangle ``abc``; all arguments broadcast as (..., 3).

    Voronoi-region classification of the query against the triangle's
    vertices, edges and face.
    """
    p, a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=np.float64) for x in (p, a, b, c)))
    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c

    def dot(x, y):
        return np.sum(x * y, axis=-1)

    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        # interior: drop along the face normal, exact for points on the plane
        nrm = np.cross(ab, ac)
        inside = p - nrm * (dot(ap, nrm) / dot(nrm, nrm))[..., None]
    conds = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
    ]
    choices = [
        a, b, a + ab * t_ab[..., None], c, a + ac * t_ac[..., None],
        b + (c - b) * t_bc[..., None],
    ]
    out = np.select([cnd[..., None] for cnd in conds], choices, default=inside)
    bad = ~np.all(np.isfinite(out), axis=-1)
    if np.any(bad):
        # zero-area triangle slipped past the regions; use its longest edge
        out[bad] = _closest_on_degenerate(p[bad], a[bad], b[bad], c[bad])
    return out


def _closest_on_segment(p, a, b):
    ab = b - a
    L = np.sum(ab * ab, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(L > 0, np.sum((p - a) * ab, axis=-1) / L, 0.0)
    return a + ab * np.clip(t, 0.0, 1.0)[..., None]


def _closest_on_degenerate(p, a, b, c):
    cands = [_closest_on_segment(p, a, b), _closest_on_segment(p, b, c), _closest_on_segment(p, a, c)]
    dist = np.stack([np.sum((x - p) ** 2, axis=-1) for x in cands])
    k = np.argmin(dist, axis=0)
    return np.stack(cands)[k, np.arange(len(p))]


def point_triangle_distances(points, triangles) -> np.ndarray:
    """Distance from each point to each triangle, shape (n_points, n_triangles)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 1, 3)
    tri = np.asarray(triangles, dtype=np.float64).reshape(1, -1, 3, 3)
    cp = closest_points_on_triangles(pts, tri[..., 0, :], tri[..., 1, :], tri[..., 2, :])
    return np.sqrt(np.sum((cp - pts) ** 2, axis=-1))


def mesh_distances(points: np.ndarray, mesh: TriangleSoup) -> np.ndarray:
    """Exact distance from each point to the nearest triangle of ``mesh``.

    Candidates are pruned with a k-d tree over triangle centroids: the distance
    to the triangle with the nearest centroid bounds the answer, and any closer
    triangle has its centroid within that bound plus the largest
    centroid-to-corner radius.
    """
    tri = mesh.triangles
    cent = tri.mean(axis=1)
    reach = float(np.sqrt(np.max(np.sum((tri - cent[:, None, :]) ** 2, axis=-1))))
    tree = cKDTree(cent)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    _, first = tree.query(pts, k=1)
    near = closest_points_on_triangles(pts, tri[first, 0], tri[first, 1], tri[first, 2])
    ub = np.sqrt(np.sum((near - pts) ** 2, axis=-1))
    cands = tree.query_ball_point(pts, ub + reach + 1e-12 * (1 + ub + reach))
    out = np.empty(len(pts))
    for i, (cand, p) in enumerate(zip(cands, pts)):
        t = tri[np.asarray(cand, dtype=np.int64)]
        cp = closest_points_on_triangles(p, t[:, 0], t[:, 1], t[:, 2])
        out[i] = min(ub[i], float(np.sqrt(np.min(np.sum((cp - p) ** 2, axis=-1)))))
    return out


def deviation_to_mesh(cloud: PointCloud, mesh: TriangleSoup, keep_distances: bool = False) -> DeviationReport:
    if len(mesh) == 0:
        raise EmptyMesh("reference mesh has no triangles")
    if len(cloud) == 0:
        raise EmptyCloud("cannot measure an empty cloud")
    return summarize(mesh_distances(cloud.points, mesh), keep_distances)
