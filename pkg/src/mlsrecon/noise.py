"""Seeded additive Gaussian noise.

Draws come from numpy's ``PCG64`` bit generator seeded with the given 64-bit
seed, transformed to normals by ``Generator.standard_normal`` (ziggurat). The
``(N, 3)`` increments are drawn in one call, row-major, so point ``i`` gets
draws ``3i, 3i+1, 3i+2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PointCloud
from .errors import InvalidParam


@dataclass(frozen=True)
class NoiseParams:
    sigma: float
    seed: int

    def __post_init__(self):
        if not (isinstance(self.sigma, (int, float)) and math.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidParam(f"sigma must be finite and non-negative, got {self.sigma!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise InvalidParam(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


def noise_increments(n: int, params: NoiseParams) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(int(params.seed)))
    return params.sigma * rng.standard_normal((n, 3))


def add_noise(cloud: PointCloud, params: NoiseParams) -> PointCloud:
    if params.sigma == 0:
        return cloud.with_points(cloud.points)
    return cloud.with_points(cloud.points + noise_increments(len(cloud), params))
