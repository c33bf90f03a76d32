from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import nearest_index_brute, nearest_scan, radius_brute, radius_scan

from mlsrecon.core import PointCloud
from mlsrecon.errors import EmptyCloud, InvalidParam
from mlsrecon.spatial import SpatialIndex


def test_radius_examples():
    idx = SpatialIndex(PointCloud([[0, 0, 0], [2, 0, 0]]))
    assert idx.radius_query((0, 0, 0), 1.0) == [(0, 0.0)]
    assert idx.radius_query((1, 0, 0), 1.5) == [(0, 1.0), (1, 1.0)]


def test_nearest_examples():
    assert SpatialIndex(PointCloud([[0, 0, 0]])).nearest((1, 1, 1)) == (0, math.sqrt(3))
    assert SpatialIndex(PointCloud([[0, 0, 0], [1, 0, 0]])).nearest((0.5, 0, 0)) == (0, 0.5)


def test_bad_radius():
    idx = SpatialIndex(PointCloud([[0, 0, 0]]))
    for r in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(InvalidParam):
            idx.radius_query((0, 0, 0), r)


def test_empty_nearest():
    with pytest.raises(EmptyCloud):
        SpatialIndex(PointCloud(np.empty((0, 3)))).nearest((0, 0, 0))


def test_radius_on_boundary_is_inclusive():
    # distances exactly representable: 3-4-5 triangle
    idx = SpatialIndex(PointCloud([[3, 4, 0], [0, 0, 5], [0, 0, 5.000000001]]))
    assert [i for i, _ in idx.radius_query((0, 0, 0), 5.0)] == [0, 1]


def test_results_use_stable_index():
    cloud = PointCloud([[0, 0, 0], [1, 0, 0], [0.2, 0, 0]], index=[7, 3, 5])
    idx = SpatialIndex(cloud)
    assert [i for i, _ in idx.radius_query((0, 0, 0), 2.0)] == [3, 5, 7]
    assert idx.nearest((0.6, 0, 0))[0] == 5


def test_random_against_scan(rng):
    pts = rng.uniform(-1, 1, (500, 3))
    idx = SpatialIndex(PointCloud(pts))
    for _ in range(20):
        c = rng.uniform(-1, 1, 3)
        assert idx.radius_query(c, 0.3) == radius_scan(pts, c, 0.3)
    qs = rng.uniform(-1.2, 1.2, (100, 3))
    ids, ds = idx.nearest_many(qs)
    for q, i, d in zip(qs, ids, ds):
        assert (int(i), float(d)) == nearest_scan(pts, q)


# lattice coordinates force many exact distance ties
lattice = st.lists(st.tuples(*[st.integers(-3, 3)] * 3), min_size=1, max_size=60)


@settings(max_examples=80, deadline=None)
@given(lattice, st.tuples(*[st.integers(-4, 4)] * 3), st.integers(1, 5))
def test_ties_match_scan(pts, q, r):
    pts = np.array(pts, dtype=float)
    q = np.array(q, dtype=float) / 2
    idx = SpatialIndex(PointCloud(pts), leaf_size=2)
    assert idx.radius_query(q, float(r)) == radius_scan(pts, q, float(r))
    assert idx.nearest(q) == nearest_scan(pts, q)


def test_repeatable_order(rng):
    pts = rng.normal(size=(300, 3))
    a = SpatialIndex(PointCloud(pts), leaf_size=4).radius_query((0, 0, 0), 1.0)
    b = SpatialIndex(PointCloud(pts), leaf_size=32).radius_query((0, 0, 0), 1.0)
    assert a == b


def test_vectorised_oracles_agree_with_scans(rng):
    pts = np.round(rng.uniform(-2, 2, (300, 3)))  # many ties
    for _ in range(30):
        c = np.round(rng.uniform(-2, 2, 3))
        assert radius_brute(pts, c, 1.5) == radius_scan(pts, c, 1.5)
        assert nearest_index_brute(pts, c) == nearest_scan(pts, c)
