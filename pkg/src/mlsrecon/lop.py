"""Locally optimal projection of a point set onto scattered data.

Each sweep moves every point at once (Jacobi style) using the previous
iterate as the weight centres::

    x_i <- sum_j p_j a_ij / sum_j a_ij
           + mu * sum_i' (x_i - x_i') b_ii' / sum_i' b_ii'

    a_ij  = theta(|x_i - p_j|) / |x_i - p_j|
    b_ii' = theta(|x_i - x_i'|) * |eta'(|x_i - x_i'|)| / |x_i - x_i'|

The first term is a Weiszfeld step towards the weighted L1 median of the
nearby data; the second pushes points apart. ``eta(r) = 1/(3 r^3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._blocks import gather, seqsum
from .core import PointCloud
from .errors import EmptyData, InvalidParam
from .kernels import KernelParams
from .spatial import SpatialIndex

_BLOCK_BUDGET = 2_000_000


@dataclass(frozen=True)
class LopParams:
    kernel: KernelParams
    mu: float = 0.4
    iterations: int = 30
    convergence_tol: float = 1e-7

    def __post_init__(self):
        if not (math.isfinite(self.mu) and 0 <= self.mu < 0.5):
            raise InvalidParam(f"mu must lie in [0, 0.5), got {self.mu!r}")
        if not isinstance(self.iterations, (int, np.integer)) or self.iterations < 1:
            raise InvalidParam("iterations must be a positive integer")
        if not (math.isfinite(self.convergence_tol) and self.convergence_tol > 0):
            raise InvalidParam("convergence_tol must be positive")


@dataclass
class LopResult:
    cloud: PointCloud
    iterations: int
    converged: bool
    max_displacement: float
    # point index -> first sweep in which it had no data within support
    isolated: dict = field(default_factory=dict)
    coincident_pairs: int = 0


def _split(n_rows, lists):
    kmax = max((len(p) for p in lists), default=1) or 1
    step = max(1, _BLOCK_BUDGET // (4 * kmax))
    return range(0, n_rows, step), step


def _attraction(X, data_pts, data_lists, h, support):
    """Weiszfeld targets; rows with no data in support come back NaN."""
    out = np.full_like(X, np.nan)
    starts, step = _split(len(X), data_lists)
    for s in starts:
        sl = slice(s, s + step)
        P, valid = gather(data_pts, data_lists[sl])
        x = X[sl].T[:, None, :]
        D = P - x
        d = np.sqrt(D[0] * D[0] + D[1] * D[1] + D[2] * D[2])
        inside = valid & (d <= support)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(inside & (d > 0), np.exp(-(d * d) / (h * h)) / d, 0.0)
        sums = seqsum(np.concatenate([a[None], a[None] * P]))
        with np.errstate(divide="ignore", invalid="ignore"):
            tgt = (sums[1:] / sums[0]).T
        tgt[sums[0] == 0] = np.nan
        # anchor rule: sitting exactly on a data point pins the point there
        hit = valid & (d == 0)
        rows = np.flatnonzero(hit.any(axis=0))
        if rows.size:
            k = np.argmax(hit[:, rows], axis=0)
            tgt[rows] = P[:, k, rows].T
        out[sl] = tgt
    return out


def _repulsion(X, self_lists, h, support):
    """Weighted mean of (x_i - x_i') over repelling neighbours, and coincidence count."""
    out = np.zeros_like(X)
    coincident = 0
    starts, step = _split(len(X), self_lists)
    for s in starts:
        sl = slice(s, s + step)
        P, valid = gather(X, self_lists[sl])
        diff = X[sl].T[:, None, :] - P
        d = np.sqrt(diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2])
        ok = valid & (d <= support) & (d > 0)
        coincident += int(np.sum(valid & (d == 0)))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            b = np.where(ok, np.exp(-(d * d) / (h * h)) / d**5, 0.0)
        sums = seqsum(np.concatenate([b[None], b[None] * diff]))
        with np.errstate(divide="ignore", invalid="ignore"):
            rep = (sums[1:] / sums[0]).T
        rep[sums[0] == 0] = 0.0
        out[sl] = rep
    return out, coincident


def lop_step(data_index: SpatialIndex, X: np.ndarray, params: LopParams):
    """One sweep. Returns ``(X_next, isolated_rows, coincident_pairs)``."""
    h, support = params.kernel.h, params.kernel.support
    data_lists = data_index.radius_positions_many(X, support)
    target = _attraction(X, data_index.cloud.points, data_lists, h, support)
    isolated = np.flatnonzero(np.isnan(target[:, 0]))
    coincident = 0
    if params.mu > 0:
        xi = SpatialIndex(PointCloud(X))
        self_lists = xi.radius_positions_many(X, support)
        self_lists = [p[p != i] for i, p in enumerate(self_lists)]
        rep, coincident = _repulsion(X, self_lists, h, support)
        target = target + params.mu * rep
    target[isolated] = X[isolated]
    # each coincident pair was seen from both ends
    return target, isolated, coincident // 2


def lop_project(data: PointCloud, initial: PointCloud, params: LopParams) -> LopResult:
    """Project ``initial`` onto the data set ``data``.

    Runs up to ``params.iterations`` sweeps, stopping early once no point
    moves more than ``params.convergence_tol``. Points without any data
    within the kernel support stay put for that sweep and are reported in
    ``isolated``; exactly coincident projected points exert no repulsion on
    each other and are counted in ``coincident_pairs``.
    """
    if len(data) == 0:
        raise EmptyData("LOP needs at least one data point")
    index = SpatialIndex(data)
    X = initial.points.copy()
    result = LopResult(initial, 0, False, math.inf)
    if len(X) == 0:
        result.converged = True
        result.max_displacement = 0.0
        return result
    for it in range(1, params.iterations + 1):
        X_next, isolated, coincident = lop_step(index, X, params)
        for i in isolated:
            result.isolated.setdefault(int(initial.index[i]), it)
        result.coincident_pairs += coincident
        step = X_next - X
        disp = float(np.max(np.sqrt(np.sum(step * step, axis=1))))
        X = X_next
        result.iterations = it
        result.max_displacement = disp
        if disp < params.convergence_tol:
            result.converged = True
            break
    result.cloud = initial.with_points(X)
    return result
