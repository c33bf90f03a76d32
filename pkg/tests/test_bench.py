from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from mlsrecon import parallel
from mlsrecon.bench import (CSV_HEADER, TORUS_R, TORUS_TUBE, SurfaceKind, SyntheticSurface, bump_height,
                            generate_surface, read_csv, run_benchmark, signed_distance)
from mlsrecon.errors import InvalidParam, WorkerFailure
from mlsrecon.mls import MlsParams


def test_single_point_sphere():
    p = generate_surface(SyntheticSurface("sphere", 1, 0)).points
    assert abs(np.linalg.norm(p[0]) - 1) <= 1e-12


def test_sphere_on_surface():
    p = generate_surface(SyntheticSurface("sphere", 10_000, 9)).points
    assert np.max(np.abs(signed_distance("sphere", p))) <= 1e-12


@pytest.mark.parametrize("n", [1, 17, 5000])
def test_plane_is_flat(n):
    p = generate_surface(SyntheticSurface("plane", n, 3)).points
    assert np.all(p[:, 2] == 0) and np.all(np.abs(p[:, :2]) <= 1)


def test_torus_and_bump_on_surface():
    t = generate_surface(SyntheticSurface("torus", 3000, 1)).points
    ring = np.hypot(t[:, 0], t[:, 1]) - TORUS_R
    assert np.max(np.abs(np.hypot(ring, t[:, 2]) - TORUS_TUBE)) <= 1e-12
    b = generate_surface(SyntheticSurface("bump", 3000, 1)).points
    assert np.array_equal(b[:, 2], bump_height(b[:, 0], b[:, 1]))


@pytest.mark.parametrize("kind", list(SurfaceKind))
def test_generators_are_seeded(kind):
    a = generate_surface(SyntheticSurface(kind, 500, 5)).points
    b = generate_surface(SyntheticSurface(kind, 500, 5)).points
    c = generate_surface(SyntheticSurface(kind, 500, 6)).points
    assert len(a) == 500 and np.array_equal(a, b) and not np.array_equal(a, c)


def test_sphere_is_quasi_uniform():
    p = generate_surface(SyntheticSurface("sphere", 4000, 2)).points
    # each octant holds close to an eighth of the samples
    octant = (p > 0) @ np.array([1, 2, 4])
    counts = np.bincount(octant, minlength=8)
    assert np.all(np.abs(counts - 500) <= 60)


@pytest.mark.parametrize("bad", [dict(kind="cube", n=5), dict(kind="plane", n=0), dict(kind="plane", n=5, seed=-1)])
def test_surface_validation(bad):
    with pytest.raises(InvalidParam):
        SyntheticSurface(**bad)


def test_signed_distance_only_for_sphere_and_plane():
    assert signed_distance("plane", [[0, 0, -0.5]])[0] == -0.5
    with pytest.raises(InvalidParam):
        signed_distance("torus", [[0, 0, 0]])


def _small():
    return generate_surface(SyntheticSurface("sphere", 600, 1)), MlsParams.create(0.3)


def test_single_worker_is_definitional():
    cloud, params = _small()
    rep = run_benchmark(cloud, params, [1], 3)
    row = rep.row(1)
    assert row.speedup == 1 and row.efficiency_pct == 100 and row.reps == 3 and len(row.samples) == 3


def test_report_identities():
    cloud, params = _small()
    rep = run_benchmark(cloud, params, [2, 1, 3], 3)
    assert [r.workers for r in rep.rows] == [1, 2, 3]
    t1 = rep.row(1).t_ns
    for r in rep.rows:
        assert isinstance(r.speedup, Fraction)
        assert r.speedup * r.t_ns == t1
        assert r.efficiency_pct * r.workers / 100 == r.speedup
        assert r.t_ns in r.samples and r.t_ns == sorted(r.samples)[(len(r.samples) - 1) // 2]


def test_csv_layout(tmp_path):
    cloud, params = _small()
    rep = run_benchmark(cloud, params, [1, 2], 1)
    path = tmp_path / "t.csv"
    rep.write_csv(path)
    text = path.read_text()
    assert text.splitlines()[0] == "p,t_ns_median,speedup,efficiency_pct,reps"
    assert CSV_HEADER == ("p", "t_ns_median", "speedup", "efficiency_pct", "reps")
    rows = read_csv(text)
    assert [r[0] for r in rows] == [1, 2] and rows[0][2] == 1.0 and rows[0][3] == 100.0


def test_mismatching_output_is_rejected(monkeypatch):
    cloud, params = _small()
    real = parallel.parallel_smooth

    def wrong(c, p, workers, backend="thread"):
        out, run = real(c, p, workers, backend)
        if workers > 1:
            out = out.with_points(out.points + 1e-15)
        return out, run

    monkeypatch.setattr("mlsrecon.bench.parallel_smooth", wrong)
    with pytest.raises(WorkerFailure):
        run_benchmark(cloud, params, [1, 2], 1)


@pytest.mark.parametrize("counts", [[], [2, 4], [1, 0]])
def test_worker_count_validation(counts):
    cloud, params = _small()
    with pytest.raises(InvalidParam):
        run_benchmark(cloud, params, counts, 1)


def test_bad_csv():
    with pytest.raises(InvalidParam):
        read_csv("a,b\n")
    assert read_csv("p,t_ns_median,speedup,efficiency_pct,reps\n") == []
