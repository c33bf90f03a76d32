"""Synthetic test surfaces and the parallel timing harness.

Speedup and efficiency are kept as exact fractions of the integer nanosecond
medians, so ``S_p * t_p == t_1`` and ``E_p * p / 100 == S_p`` hold exactly.
"""

from __future__ import annotations

import csv
import enum
import io
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .core import PointCloud
from .errors import InvalidParam, WorkerFailure
from .mls import MlsParams
from .parallel import parallel_smooth

CSV_HEADER = ("p", "t_ns_median", "speedup", "efficiency_pct", "reps")

_GOLDEN = (1 + 5 ** 0.5) / 2
# plastic number: generator of the R2 low-discrepancy sequence
_PLASTIC = 1.32471795724474602596
TORUS_R = 1.0
TORUS_TUBE = 0.3
BUMP_HEIGHT = 0.5
BUMP_WIDTH = 0.3


class SurfaceKind(str, enum.Enum):
    PLANE = "plane"
    SPHERE = "sphere"
    TORUS = "torus"
    BUMP = "bump"


@dataclass(frozen=True)
class SyntheticSurface:
    kind: SurfaceKind
    n: int
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", SurfaceKind(self.kind))
        except ValueError:
            raise InvalidParam(f"unknown surface kind {self.kind!r}") from None
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidParam(f"sample count must be a positive integer, got {self.n!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2 ** 64:
            raise InvalidParam("seed must be an unsigned 64-bit integer")


def _r2(n, offset):
    k = np.arange(1, n + 1, dtype=np.float64)
    a1, a2 = 1 / _PLASTIC, 1 / _PLASTIC ** 2
    return np.column_stack([(offset[0] + k * a1) % 1.0, (offset[1] + k * a2) % 1.0])


def _random_rotation(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _sphere(n, rng):
    k = np.arange(n, dtype=np.float64)
    z = 1 - (2 * k + 1) / n
    rho = np.sqrt(np.maximum(0.0, 1 - z * z))
    phi = 2 * np.pi * ((k / _GOLDEN) % 1.0)
    p = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z]) @ _random_rotation(rng).T
    return p / np.linalg.norm(p, axis=1)[:, None]


def _plane(n, rng):
    uv = 2 * _r2(n, rng.random(2)) - 1
    return np.column_stack([uv, np.zeros(n)])


def _torus(n, rng):
    # area element is proportional to R + r cos(v); accept v by that density
    out = np.empty((0, 2))
    while len(out) < n:
        m = 2 * (n - len(out)) + 16
        uv = rng.random((m, 2)) * 2 * np.pi
        keep = rng.random(m) * (TORUS_R + TORUS_TUBE) <= TORUS_R + TORUS_TUBE * np.cos(uv[:, 1])
        out = np.concatenate([out, uv[keep]])
    u, v = out[:n, 0], out[:n, 1]
    ring = TORUS_R + TORUS_TUBE * np.cos(v)
    return np.column_stack([ring * np.cos(u), ring * np.sin(u), TORUS_TUBE * np.sin(v)])


def _bump(n, rng):
    xy = 2 * _r2(n, rng.random(2)) - 1
    return np.column_stack([xy, bump_height(xy[:, 0], xy[:, 1])])


def bump_height(x, y):
    return BUMP_HEIGHT * np.exp(-(x * x + y * y) / (2 * BUMP_WIDTH ** 2))


_GENERATORS = {
    SurfaceKind.PLANE: _plane,
    SurfaceKind.SPHERE: _sphere,
    SurfaceKind.TORUS: _torus,
    SurfaceKind.BUMP: _bump,
}


def generate_surface(surface: SyntheticSurface) -> PointCloud:
    """Seeded quasi-uniform samples lying on the analytic surface.

    sphere: spherical Fibonacci lattice under a seeded rotation, renormalised;
    plane and bump: R2 sequence over [-1, 1]^2 with a seeded offset;
    torus: seeded rejection sampling of the area measure.
    """
    rng = np.random.Generator(np.random.PCG64(surface.seed))
    return PointCloud(_GENERATORS[surface.kind](surface.n, rng))


def signed_distance(kind, points) -> np.ndarray:
    """Exact signed distance to the unit sphere or the z = 0 plane."""
    kind = SurfaceKind(kind)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if kind is SurfaceKind.SPHERE:
        return np.linalg.norm(pts, axis=1) - 1.0
    if kind is SurfaceKind.PLANE:
        return pts[:, 2].copy()
    raise InvalidParam(f"no analytic distance for {kind.value}")


# ---------------------------------------------------------------- timing


@dataclass(frozen=True)
class TimingRow:
    workers: int
    t_ns: int
    speedup: Fraction
    efficiency_pct: Fraction
    reps: int
    samples: tuple = ()

    def csv_fields(self):
        return (self.workers, self.t_ns, repr(float(self.speedup)),
                repr(float(self.efficiency_pct)), self.reps)


@dataclass
class TimingReport:
    rows: List[TimingRow] = field(default_factory=list)

    def row(self, p: int) -> TimingRow:
        return next(r for r in self.rows if r.workers == p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(self.to_csv())


def read_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise InvalidParam("not a timing CSV")
    return [(int(p), int(t), float(s), float(e), int(k)) for p, t, s, e, k in rows[1:]]


def _median_ns(samples) -> int:
    # median_low keeps the value an actual integer sample
    return int(statistics.median_low(samples))


def run_benchmark(cloud: PointCloud, params: MlsParams, worker_counts: Sequence[int],
                  repetitions: int = 5, backend: str = "thread") -> TimingReport:
    """Time ``parallel_smooth`` for each worker count.

    Only the smoothing call is timed. Every run's output must equal the
    single-worker output bit for bit; otherwise ``WorkerFailure`` is raised and
    no report is produced.
    """
    counts = list(dict.fromkeys(int(p) for p in worker_counts))
    if not counts or 1 not in counts:
        raise InvalidParam("worker counts must be non-empty and include 1")
    if any(p < 1 for p in counts):
        raise InvalidParam("worker counts must be positive")
    if not isinstance(repetitions, (int, np.integer)) or repetitions < 1:
        raise InvalidParam("repetitions must be a positive integer")
    counts.sort()
    baseline = None
    samples = {}
    for p in counts:
        ts = []
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            out, _run = parallel_smooth(cloud, params, p, backend=backend)
            ts.append(time.perf_counter_ns() - t0)
            if baseline is None:
                baseline = out.points
            elif not np.array_equal(out.points, baseline):
                raise WorkerFailure(f"output with {p} workers differs from the single-worker output")
        samples[p] = ts
    # a zero median is only possible with a coarse clock; clamp to 1 ns
    t1 = max(_median_ns(samples[1]), 1)
    report = TimingReport()
    for p in counts:
        tp = max(_median_ns(samples[p]), 1)
        s = Fraction(t1, tp)
        report.rows.append(TimingRow(p, tp, s, s * 100 / p, repetitions, tuple(samples[p])))
    return report
