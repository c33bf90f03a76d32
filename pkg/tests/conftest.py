from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mlsrecon.bench import SyntheticSurface, generate_surface  # noqa: E402
from mlsrecon.noise import NoiseParams, add_noise  # noqa: E402


def noisy_plane(rng, n, sigma, half=1.0):
    xy = rng.uniform(-half, half, (n, 2))
    return np.column_stack([xy, rng.normal(0.0, sigma, n)])


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def noisy_sphere_10k():
    clean = generate_surface(SyntheticSurface("sphere", 10_000, 7))
    return clean, add_noise(clean, NoiseParams(0.05, 8))
