"""Moving least squares projection of a point cloud onto its own MLS surface."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import wls
from .core import PointCloud, as_point
from .errors import EmptyCloud, InvalidParam
from .kernels import KernelParams
from .spatial import SpatialIndex

# upper bound on B*K*F floats held by one padded work block
_BLOCK_BUDGET = 4_000_000
_QUERY_CHUNK = 1024


@dataclass(frozen=True)
class MlsParams:
    kernel: KernelParams
    degree: int = 2
    plane_tol: float = 1e-10
    plane_max_iter: int = 50

    def __post_init__(self):
        if not isinstance(self.degree, (int, np.integer)) or not 1 <= self.degree <= wls.MAX_DEGREE:
            raise InvalidParam(f"degree must be an integer in [1, {wls.MAX_DEGREE}]")
        if not (math.isfinite(self.plane_tol) and self.plane_tol > 0):
            raise InvalidParam("plane_tol must be positive")
        if not isinstance(self.plane_max_iter, (int, np.integer)) or self.plane_max_iter < 1:
            raise InvalidParam("plane_max_iter must be a positive integer")

    @classmethod
    def create(cls, h: float, degree: int = 2, cutoff_multiple: float = 3.0, **kw) -> "MlsParams":
        return cls(KernelParams(h, cutoff_multiple), degree, **kw)


class Status(enum.IntEnum):
    FULL = 0
    DEGRADED = 1  # polynomial solved at a lower degree, see ``degree``
    PLANE_ONLY = 2
    SKIPPED = 3


@dataclass(frozen=True)
class ProjectionOutcome:
    projected: tuple
    status: Status
    iterations_used: int
    degree: int = 0
    converged: bool = True

    def __str__(self):
        if self.status is Status.DEGRADED:
            return f"DegradedDegree({self.degree})"
        return self.status.name.title().replace("_", "")


@dataclass
class SmoothSummary:
    """Per-status counts for one smoothing pass."""

    n: int = 0
    full: int = 0
    degraded: dict = field(default_factory=dict)
    plane_only: int = 0
    skipped: int = 0
    too_few_neighbors: int = 0
    degenerate: int = 0
    no_convergence: int = 0

    @classmethod
    def from_arrays(cls, status, degree, plane_code) -> "SmoothSummary":
        deg = {int(k): int(np.sum((status == Status.DEGRADED) & (degree == k)))
               for k in np.unique(degree[status == Status.DEGRADED])}
        return cls(
            n=len(status),
            full=int(np.sum(status == Status.FULL)),
            degraded=deg,
            plane_only=int(np.sum(status == Status.PLANE_ONLY)),
            skipped=int(np.sum(status == Status.SKIPPED)),
            too_few_neighbors=int(np.sum(plane_code == wls.TOO_FEW)),
            degenerate=int(np.sum(plane_code == wls.DEGENERATE)),
            no_convergence=int(np.sum(plane_code == wls.NO_CONVERGENCE)),
        )

    def merge(self, other: "SmoothSummary") -> "SmoothSummary":
        deg = dict(self.degraded)
        for k, v in other.degraded.items():
            deg[k] = deg.get(k, 0) + v
        return SmoothSummary(
            self.n + other.n, self.full + other.full, deg,
            self.plane_only + other.plane_only, self.skipped + other.skipped,
            self.too_few_neighbors + other.too_few_neighbors,
            self.degenerate + other.degenerate, self.no_convergence + other.no_convergence,
        )

    def as_dict(self) -> dict:
        return {
            "n": self.n, "full": self.full,
            "degraded": {str(k): v for k, v in sorted(self.degraded.items())},
            "plane_only": self.plane_only, "skipped": self.skipped,
            "too_few_neighbors": self.too_few_neighbors, "degenerate": self.degenerate,
            "no_convergence": self.no_convergence,
        }


@dataclass
class BatchResult:
    projected: np.ndarray
    status: np.ndarray
    degree: np.ndarray
    iterations: np.ndarray
    plane_code: np.ndarray


def _polynomial_stage(r, fit: wls.PlaneFit, params: MlsParams):
    """Degree fallback chain on every usable plane of one block."""
    planes = fit.planes
    B = len(r)
    out = r.copy()
    status = np.full(B, Status.SKIPPED, dtype=np.int64)
    degree = np.zeros(B, dtype=np.int64)
    for rows, P, valid in fit.groups:
        q, n = planes.q[rows], planes.n[rows]
        u, v = wls.tangent_axes(n)
        remaining = np.arange(len(rows))
        for d in range(params.degree, 0, -1):
            if remaining.size == 0:
                break
            sub = remaining.size < len(rows)
            coefs, code = wls.fit_polynomials_batch(
                np.ascontiguousarray(P[:, :, remaining]) if sub else P,
                np.ascontiguousarray(valid[:, remaining]) if sub else valid,
                q[remaining], n[remaining], u[remaining], v[remaining], params.kernel, d,
            )
            solved = code == wls.OK
            hit = remaining[solved]
            out[rows[hit]] = q[hit] + coefs[solved, :1] * n[hit]
            status[rows[hit]] = Status.FULL if d == params.degree else Status.DEGRADED
            degree[rows[hit]] = d
            remaining = remaining[~solved]
        out[rows[remaining]] = q[remaining]
        status[rows[remaining]] = Status.PLANE_ONLY
    return out, status, degree


def project_queries(index: SpatialIndex, queries: np.ndarray, params: MlsParams) -> BatchResult:
    """Project many query points onto the MLS surface of ``index.cloud``.

    The per-query result is independent of how queries are chunked and of
    which other points the index holds beyond the search reach of the query.
    """
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    N = len(queries)
    res = BatchResult(
        projected=np.empty((N, 3)), status=np.empty(N, dtype=np.int64),
        degree=np.empty(N, dtype=np.int64), iterations=np.empty(N, dtype=np.int64),
        plane_code=np.empty(N, dtype=np.int64),
    )
    support = params.kernel.support
    m = wls.n_coefficients(params.degree)
    feats = max(11, m * (m + 1) // 2 + m)
    for start in range(0, N, _QUERY_CHUNK):
        chunk = queries[start:start + _QUERY_CHUNK]
        pos_lists = index.radius_positions_many(chunk, support)
        kmax = max((len(p) for p in pos_lists), default=1) or 1
        step = max(1, _BLOCK_BUDGET // (kmax * feats))
        for s in range(0, len(chunk), step):
            r = chunk[s:s + step]
            fit = wls.fit_planes(index, r, params.kernel, params.plane_tol, params.plane_max_iter,
                                 pos_lists=pos_lists[s:s + step])
            out, st, dg = _polynomial_stage(r, fit, params)
            g = slice(start + s, start + s + len(out))
            res.projected[g], res.status[g], res.degree[g] = out, st, dg
            res.iterations[g], res.plane_code[g] = fit.planes.iterations, fit.planes.code
    return res


def _index_for(source: Union[SpatialIndex, PointCloud]) -> SpatialIndex:
    if isinstance(source, SpatialIndex):
        return source
    return SpatialIndex(source)


def project_point(source: Union[SpatialIndex, PointCloud], r, params: MlsParams) -> ProjectionOutcome:
    """Project one point onto the MLS surface defined by ``source``.

    Never raises for numerical trouble: degenerate fits fall back to a lower
    polynomial degree, then to the plane, and a point without a usable plane
    is returned unchanged with status ``SKIPPED``.
    """
    index = _index_for(source)
    if len(index) == 0:
        raise EmptyCloud("cannot project onto an empty cloud")
    r = as_point(r, "r")
    res = project_queries(index, r[None, :], params)
    return ProjectionOutcome(
        projected=tuple(map(float, res.projected[0])),
        status=Status(int(res.status[0])),
        iterations_used=int(res.iterations[0]),
        degree=int(res.degree[0]),
        converged=bool(res.plane_code[0] == wls.OK),
    )


def order_keys(cloud: PointCloud) -> np.ndarray:
    """Rank of each point by (stable index, position): a unique neighbour
    ordering key that travels with the point under any permutation."""
    N = len(cloud)
    order = np.lexsort((np.arange(N), cloud.index))
    keys = np.empty(N, dtype=np.int64)
    keys[order] = np.arange(N)
    return keys


def smooth_cloud(cloud: PointCloud, params: MlsParams, index: Optional[SpatialIndex] = None):
    """Project every point of ``cloud`` onto the MLS surface of the same input cloud.

    Returns ``(smoothed, summary)``; the smoothed cloud keeps the input order
    and stable indices.
    """
    if len(cloud) == 0:
        return cloud, SmoothSummary()
    index = index or SpatialIndex(PointCloud(cloud.points, order_keys(cloud)))
    res = project_queries(index, cloud.points, params)
    return cloud.with_points(res.projected), SmoothSummary.from_arrays(res.status, res.degree, res.plane_code)
