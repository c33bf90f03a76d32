from __future__ import annotations

import json

import numpy as np
import pytest

from mlsrecon.cli import main
from mlsrecon.io import read_cloud

# metrics std_deviation of the seeded sphere pipeline, frozen from the pilot run
GOLDEN_NOISY_STD = 0.052057561403051074
GOLDEN_SMOOTH_STD = 0.016102834247605415


def run(*argv):
    return main([str(a) for a in argv])


def test_plane_pipeline_is_fixed(tmp_path, capsys):
    p, q = tmp_path / "p.xyz", tmp_path / "q.xyz"
    assert run("generate", "--kind", "plane", "--n", 100, "--seed", 1, "-o", p) == 0
    assert run("smooth", "-i", p, "-o", q, "--radius", 0.5, "--degree", 2, "--workers", 1) == 0
    assert np.max(np.abs(read_cloud(q).points - read_cloud(p).points)) <= 1e-9
    err = capsys.readouterr().err.splitlines()
    resolved = json.loads(err[-2])
    assert resolved["radius"] == 0.5 and resolved["command"] == "smooth"
    assert json.loads(err[-1])["summary"]["full"] == 100


def test_zero_noise_is_identity(tmp_path):
    p, q = tmp_path / "p.ply", tmp_path / "q.ply"
    run("generate", "--kind", "torus", "--n", 200, "--seed", 3, "-o", p)
    assert run("noise", "-i", p, "-o", q, "--sigma", 0, "--seed", 9) == 0
    assert p.read_bytes() == q.read_bytes()


def test_identical_runs_and_worker_counts_give_identical_bytes(tmp_path):
    src, noisy = tmp_path / "s.xyz", tmp_path / "n.xyz"
    run("generate", "--kind", "bump", "--n", 800, "--seed", 2, "-o", src)
    run("noise", "-i", src, "-o", noisy, "--sigma", 0.01, "--seed", 4)
    outs = []
    for k, w in enumerate([1, 1, 3]):
        o = tmp_path / f"o{k}.xyz"
        assert run("smooth", "-i", noisy, "-o", o, "--radius", 0.15, "--degree", 2, "--workers", w) == 0
        outs.append(o.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_golden_sphere_pipeline(tmp_path):
    clean, noisy, smooth = tmp_path / "c.xyz", tmp_path / "n.xyz", tmp_path / "s.xyz"
    run("generate", "--kind", "sphere", "--n", 10_000, "--seed", 7, "-o", clean)
    run("noise", "-i", clean, "-o", noisy, "--sigma", 0.05, "--seed", 8)
    assert run("smooth", "-i", noisy, "-o", smooth, "--radius", 0.2, "--degree", 2, "--workers", 1) == 0
    stds = []
    for f in (noisy, smooth):
        rep = tmp_path / "r.json"
        assert run("metrics", "--input", f, "--reference", clean, "--out", rep) == 0
        obj = json.loads(rep.read_text())
        assert list(obj) == ["n", "mean_distance", "std_deviation", "max_distance"]
        stds.append(obj["std_deviation"])
    assert stds[1] < stds[0]
    assert abs(stds[0] - GOLDEN_NOISY_STD) <= 1e-12
    assert abs(stds[1] / GOLDEN_SMOOTH_STD - 1) <= 0.05


def test_lop_and_mesh_metrics(tmp_path):
    data, init, out = tmp_path / "d.xyz", tmp_path / "i.xyz", tmp_path / "o.xyz"
    run("generate", "--kind", "plane", "--n", 500, "--seed", 1, "-o", data)
    run("generate", "--kind", "plane", "--n", 50, "--seed", 2, "-o", init)
    assert run("lop", "--data", data, "--init", init, "-o", out, "--radius", 0.2,
               "--mu", 0.3, "--iterations", 5) == 0
    assert np.all(read_cloud(out).points[:, 2] == 0)
    mesh = tmp_path / "m.ply"
    mesh.write_text("ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
                    "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
                    "-5 -5 0\n5 -5 0\n0 5 0\n3 0 1 2\n")
    rep = tmp_path / "r.json"
    assert run("metrics", "--input", out, "--reference", mesh, "--mesh", "--out", rep) == 0
    assert json.loads(rep.read_text())["max_distance"] == 0.0


def test_bench_writes_csv(tmp_path):
    src, csv = tmp_path / "s.xyz", tmp_path / "t.csv"
    run("generate", "--kind", "sphere", "--n", 300, "--seed", 1, "-o", src)
    assert run("bench", "-i", src, "--workers", "1,2", "--reps", 1, "--radius", 0.3,
               "--degree", 1, "--csv", csv) == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "p,t_ns_median,speedup,efficiency_pct,reps" and len(lines) == 3


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["smooth", "-i", "a.xyz", "-o", "b.xyz"],
    ["smooth", "-i", "a.xyz", "-o", "b.xyz", "--radius", "-1"],
    ["smooth", "-i", "a.xyz", "-o", "b.xyz", "--radius", "nan"],
    ["smooth", "-i", "a.xyz", "-o", "b.xyz", "--radius", "0.2", "--degree", "5"],
    ["smooth", "-i", "a.xyz", "-o", "b.xyz", "--radius", "0.2", "--xyz", "--ply"],
    ["noise", "-i", "a.xyz", "-o", "b.xyz", "--sigma", "0.1"],
    ["noise", "-i", "a.xyz", "-o", "b.xyz", "--sigma", "0.1", "--seed", "-3"],
    ["lop", "--data", "a", "--init", "b", "-o", "c", "--radius", "1", "--mu", "0.5"],
    ["bench", "-i", "a.xyz", "--workers", "2,4", "--radius", "0.2", "--csv", "t.csv"],
    ["generate", "--kind", "cube", "--n", "5", "--seed", "1", "-o", "x.xyz"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_data_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.xyz"
    bad.write_text("0 0 0\nnan 1 2\n")
    assert run("noise", "-i", bad, "-o", tmp_path / "o.xyz", "--sigma", 0.1, "--seed", 1) == 2
    assert f"{bad}:2: non-finite coordinate 'nan'" in capsys.readouterr().err
    assert run("noise", "-i", tmp_path / "missing.xyz", "-o", tmp_path / "o.xyz",
               "--sigma", 0.1, "--seed", 1) == 2
    empty = tmp_path / "e.xyz"
    empty.write_text("")
    assert run("metrics", "--input", empty, "--reference", empty, "--out", tmp_path / "r.json") == 2


def test_unknown_extension_exits_1(tmp_path):
    assert run("generate", "--kind", "plane", "--n", 5, "--seed", 1, "-o", tmp_path / "p.txt") == 1


def test_numerical_failure_exits_3(tmp_path):
    line = tmp_path / "line.xyz"
    line.write_text("".join(f"{x} 0 0\n" for x in range(20)))
    assert run("smooth", "-i", line, "-o", tmp_path / "o.xyz", "--radius", 2.0) == 3
    far = tmp_path / "far.xyz"
    far.write_text("100 100 100\n")
    assert run("lop", "--data", line, "--init", far, "-o", tmp_path / "o.xyz", "--radius", 0.5) == 3
