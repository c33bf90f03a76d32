"""Slab-decomposed MLS smoothing with left/right border exchange.

The cloud is cut into ``W`` slabs of equal point count along the longest
bounding-box axis. Worker ``u`` owns slab ``u`` and talks only to ``u - 1`` and
``u + 1`` through message channels:

1. receive the left border from ``u - 1``, then send its own right border to
   ``u + 1``;
2. receive the right border from ``u + 1``, then send its own left border to
   ``u - 1``;
3. project its own points using own + received points as neighbour source;
4. send the projected points to the gatherer, which restores input order.

A border is every point the sender holds (own or already received from
further away) within the search reach of the shared cut: the farthest a
neighbour can be from a query and still carry weight. Forwarding what
was received keeps slabs thinner than the support correct. The chain is open:
the first and last workers have no outer neighbour.

Workers run as threads (default) or forked processes. Either way nothing is
shared; data moves only through the channels.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import queue
import threading
import time
import traceback
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .core import PointCloud, bounding_box
from .errors import InvalidParam, WorkerFailure
from .mls import MlsParams, SmoothSummary, order_keys, project_queries
from .wls import search_radius
from .spatial import SpatialIndex

log = logging.getLogger(__name__)

AXES = "XYZ"
BACKENDS = ("thread", "process")
_POLL = 0.05
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PartitionLayout:
    axis: int
    cuts: tuple
    slabs: tuple  # ((lo, hi), ...); half-open except the last, which is closed
    border_width: float
    counts: tuple

    @property
    def workers(self) -> int:
        return len(self.slabs)

    @property
    def axis_name(self) -> str:
        return AXES[self.axis]

    def border_test_width(self, cut: float) -> float:
        # a few ulps wider than the support: a neighbour whose computed distance
        # is exactly the support must never miss the halo through rounding
        return self.border_width + 8 * _EPS * (abs(cut) + self.border_width)


@dataclass
class BorderExchange:
    """What one worker sent and received. Clouds carry their stable indices."""

    rank: int
    own: PointCloud
    incoming_left: PointCloud
    incoming_right: PointCloud
    outgoing_left: PointCloud
    outgoing_right: PointCloud

    @property
    def halo(self) -> PointCloud:
        return _concat([self.incoming_left, self.incoming_right])

    @property
    def local(self) -> PointCloud:
        return _concat([self.own, self.incoming_left, self.incoming_right])


@dataclass
class WorkerStats:
    rank: int
    own_points: int
    halo_points: int
    exchange_s: float
    compute_s: float


@dataclass
class ParallelRun:
    layout: PartitionLayout
    summary: SmoothSummary
    workers: List[WorkerStats] = field(default_factory=list)
    wall_s: float = 0.0


def _empty_cloud():
    return PointCloud(np.empty((0, 3)), np.empty(0, dtype=np.int64))


def _concat(clouds):
    clouds = [c for c in clouds if len(c)]
    if not clouds:
        return _empty_cloud()
    return PointCloud(np.concatenate([c.points for c in clouds]),
                      np.concatenate([c.index for c in clouds]))


def partition(cloud: PointCloud, workers: int, support: float):
    """Equal-count slab decomposition.

    Points are ranked by their coordinate on the longest axis (ties by stable
    index, then position) and dealt out in contiguous runs of ``ceil(N/W)`` or
    ``floor(N/W)``. Each cut sits midway between the last coordinate of one run
    and the first of the next. Returned clouds keep the stable indices.
    """
    if not isinstance(workers, (int, np.integer)) or workers < 1:
        raise InvalidParam(f"workers must be a positive integer, got {workers!r}")
    if not (np.isfinite(support) and support > 0):
        raise InvalidParam("support must be positive")
    box = bounding_box(cloud)  # raises EmptyCloud
    ext = box.extent
    axis = int(np.argmax(ext))
    coord = cloud.points[:, axis]
    N = len(cloud)
    order = np.lexsort((np.arange(N), cloud.index, coord))
    runs = np.array_split(order, workers)
    sc = coord[order]
    cuts = []
    k = 0
    for run in runs[:-1]:
        k += len(run)
        if k == 0:
            cuts.append(float(sc[0]))
        elif k == N:
            cuts.append(float(sc[-1]))
        else:
            cuts.append(float(0.5 * (sc[k - 1] + sc[k])))
    bounds = [box.min[axis]] + cuts + [box.max[axis]]
    slabs = tuple((float(bounds[u]), float(bounds[u + 1])) for u in range(workers))
    layout = PartitionLayout(axis, tuple(cuts), slabs, float(support), tuple(len(r) for r in runs))
    parts = [cloud.subset(np.sort(r)) for r in runs]
    return layout, parts


# ---------------------------------------------------------------- channels


class Channel:
    """One-directional mailbox between two workers."""

    def __init__(self, q):
        self._q = q

    def send(self, msg):
        self._q.put(msg)

    def recv(self, abort):
        while True:
            if abort.is_set():
                raise WorkerFailure("aborted: another worker failed")
            try:
                return self._q.get(timeout=_POLL)
            except queue.Empty:
                continue


def _pack(cloud: PointCloud):
    return cloud.points, cloud.index


def _unpack(msg) -> PointCloud:
    return PointCloud(msg[0], msg[1])


def _exchange(rank, W, own, layout, chans, abort) -> BorderExchange:
    """Steps 1 and 2 of the worker protocol."""
    axis = layout.axis
    incoming_left = _unpack(chans["from_left"].recv(abort)) if rank > 0 else _empty_cloud()
    if rank < W - 1:
        cut = layout.cuts[rank]
        pool = _concat([own, incoming_left])
        sel = (cut - pool.points[:, axis]) <= layout.border_test_width(cut)
        outgoing_right = pool.subset(sel)
        chans["to_right"].send(_pack(outgoing_right))
    else:
        outgoing_right = _empty_cloud()
    incoming_right = _unpack(chans["from_right"].recv(abort)) if rank < W - 1 else _empty_cloud()
    if rank > 0:
        cut = layout.cuts[rank - 1]
        pool = _concat([own, incoming_right])
        sel = (pool.points[:, axis] - cut) <= layout.border_test_width(cut)
        outgoing_left = pool.subset(sel)
        chans["to_left"].send(_pack(outgoing_left))
    else:
        outgoing_left = _empty_cloud()
    return BorderExchange(rank, own, incoming_left, incoming_right, outgoing_left, outgoing_right)


def _smooth_worker(rank, W, own_msg, layout, params, chans, results, abort):
    try:
        own = _unpack(own_msg)
        t0 = time.perf_counter()
        ex = _exchange(rank, W, own, layout, chans, abort)
        t1 = time.perf_counter()
        local = ex.local
        # index holds the neighbour ordering keys of the sequential path
        res = project_queries(SpatialIndex(local), own.points, params)
        t2 = time.perf_counter()
        results.put(("ok", rank, own.index, res.projected, res.status, res.degree,
                     res.plane_code, (len(own), len(ex.halo), t1 - t0, t2 - t1)))
    except WorkerFailure:
        results.put(("aborted", rank, None))
    except BaseException:  # noqa: BLE001 - report everything to the gatherer
        abort.set()
        results.put(("error", rank, traceback.format_exc()))


def _exchange_worker(rank, W, own_msg, layout, chans, results, abort):
    try:
        ex = _exchange(rank, W, _unpack(own_msg), layout, chans, abort)
        results.put(("ok", rank, ex))
    except BaseException:  # noqa: BLE001
        abort.set()
        results.put(("error", rank, traceback.format_exc()))


def _wire(W, make_queue):
    right = [Channel(make_queue()) for _ in range(max(W - 1, 0))]  # u -> u+1
    left = [Channel(make_queue()) for _ in range(max(W - 1, 0))]   # u+1 -> u
    chans = []
    for u in range(W):
        chans.append({
            "from_left": right[u - 1] if u > 0 else None,
            "to_right": right[u] if u < W - 1 else None,
            "from_right": left[u] if u < W - 1 else None,
            "to_left": left[u - 1] if u > 0 else None,
        })
    return chans


def _run(target, args_per_rank, backend):
    """Start one worker per rank and collect exactly one message from each."""
    W = len(args_per_rank)
    if backend == "thread":
        results, abort = queue.Queue(), threading.Event()
        chans = _wire(W, queue.Queue)
        procs = [threading.Thread(target=target, args=(u, W, *args_per_rank[u], chans[u], results, abort),
                                  daemon=True) for u in range(W)]
    elif backend == "process":
        ctx = mp.get_context("fork")
        results, abort = ctx.Queue(), ctx.Event()
        chans = _wire(W, ctx.Queue)
        procs = [ctx.Process(target=target, args=(u, W, *args_per_rank[u], chans[u], results, abort),
                             daemon=True) for u in range(W)]
    else:
        raise InvalidParam(f"backend must be one of {BACKENDS}, got {backend!r}")
    for p in procs:
        p.start()
    msgs, errors = {}, []
    try:
        while len(msgs) + len(errors) < W:
            try:
                msg = results.get(timeout=_POLL)
            except queue.Empty:
                if backend == "process" and any(
                        not p.is_alive() and p.exitcode not in (0, None) for p in procs):
                    abort.set()
                    raise WorkerFailure("a worker process died without reporting")
                continue
            if msg[0] == "ok":
                msgs[msg[1]] = msg
            else:
                errors.append(msg)
    finally:
        for p in procs:
            p.join(timeout=5)
            if backend == "process" and p.is_alive():
                p.terminate()
    real = [e for e in errors if e[0] == "error"]
    if real:
        raise WorkerFailure(f"worker {real[0][1]} failed:\n{real[0][2]}")
    if errors:
        raise WorkerFailure("workers aborted")
    return [msgs[u] for u in range(W)]


def exchange_borders(layout: PartitionLayout, parts, backend: str = "thread") -> List[BorderExchange]:
    """Run only the border-exchange protocol; returns each worker's view."""
    if len(parts) != layout.workers:
        raise InvalidParam("one cloud per slab is required")
    msgs = _run(_exchange_worker, [(_pack(p), layout) for p in parts], backend)
    return [m[2] for m in msgs]


def parallel_smooth(cloud: PointCloud, params: MlsParams, workers: int, backend: str = "thread"):
    """MLS-smooth ``cloud`` on ``workers`` share-nothing workers.

    Returns ``(smoothed, run)``. The smoothed cloud is bit-identical to
    :func:`mlsrecon.mls.smooth_cloud` on the same input for every worker count.
    """
    if len(cloud) == 0:
        if not isinstance(workers, (int, np.integer)) or workers < 1:
            raise InvalidParam(f"workers must be a positive integer, got {workers!r}")
        return cloud, ParallelRun(PartitionLayout(0, (), ((0.0, 0.0),) * workers, search_radius(params.kernel),
                                                  (0,) * workers), SmoothSummary())
    t0 = time.perf_counter()
    keys = order_keys(cloud)
    layout, parts = partition(PointCloud(cloud.points, keys), workers, search_radius(params.kernel))
    position = np.argsort(keys)
    msgs = _run(_smooth_worker, [(_pack(p), layout, params) for p in parts], backend)
    N = len(cloud)
    out = np.empty((N, 3))
    status = np.empty(N, dtype=np.int64)
    degree = np.empty(N, dtype=np.int64)
    plane_code = np.empty(N, dtype=np.int64)
    stats = []
    for _, rank, key, projected, st, dg, pc, (n_own, n_halo, tex, tcomp) in msgs:
        pos = position[key]
        out[pos], status[pos], degree[pos], plane_code[pos] = projected, st, dg, pc
        stats.append(WorkerStats(rank, n_own, n_halo, tex, tcomp))
    run = ParallelRun(layout, SmoothSummary.from_arrays(status, degree, plane_code), stats,
                      time.perf_counter() - t0)
    log.debug("parallel_smooth: %d workers, %.3fs", workers, run.wall_s)
    return cloud.with_points(out), run
