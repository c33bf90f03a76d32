from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlsrecon.errors import InvalidParam
from mlsrecon.kernels import KernelParams, eta, eta_slope, theta


def test_theta_examples():
    k = KernelParams(1.0)
    assert theta(0.0, k) == 1.0
    assert theta(1.0, k) == pytest.approx(0.367879, abs=1e-6)
    assert theta(3.1, k) == 0.0
    assert theta(3.0, k) == math.exp(-9.0)


def test_support():
    assert KernelParams(0.2, 3.0).support == pytest.approx(0.6)


@pytest.mark.parametrize("h,c", [(0.0, 3.0), (-1.0, 3.0), (1.0, 0.0), (math.nan, 3.0), (math.inf, 3.0)])
def test_bad_params(h, c):
    with pytest.raises(InvalidParam):
        KernelParams(h, c)


def test_negative_distance_rejected():
    with pytest.raises(InvalidParam):
        theta(-0.1, KernelParams(1.0))


def test_theta_vectorised():
    k = KernelParams(0.5)
    d = np.array([0.0, 0.5, 1.49, 1.51])
    assert np.array_equal(theta(d, k), np.array([theta(float(x), k) for x in d]))


def test_eta_examples():
    assert eta(1.0) == pytest.approx(1 / 3)
    assert eta(2.0) == pytest.approx(1 / 24)
    assert eta_slope(1.0) == pytest.approx(1.0)
    for bad in (0.0, -1.0):
        with pytest.raises(InvalidParam):
            eta(bad)


def test_eta_slope_matches_finite_difference():
    for d in (0.3, 1.0, 2.5):
        fd = (eta(d + 1e-6) - eta(d - 1e-6)) / 2e-6
        assert abs(fd) == pytest.approx(eta_slope(d), rel=1e-6)


pos = st.floats(0.0, 50.0, allow_nan=False)


@given(pos, pos, st.floats(0.05, 10.0), st.floats(0.5, 5.0))
def test_theta_non_increasing(a, b, h, c):
    k = KernelParams(h, c)
    lo, hi = min(a, b), max(a, b)
    assert theta(lo, k) >= theta(hi, k)
    assert (theta(lo, k) > 0) == (lo <= k.support)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_eta_strictly_decreasing(a, b):
    if a != b:
        lo, hi = min(a, b), max(a, b)
        assert eta(lo) > eta(hi) > 0
