"""Weight functions: the Gaussian attraction kernel and the LOP repulsion term."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam


@dataclass(frozen=True)
class KernelParams:
    """Gaussian kernel ``exp(-d^2/h^2)`` truncated at ``h * cutoff_multiple``.

    ``h`` is what the CLI calls ``--radius``.
    """

    h: float
    cutoff_multiple: float = 3.0

    def __post_init__(self):
        for name in ("h", "cutoff_multiple"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParam(f"{name} must be a positive finite number, got {v!r}")

    @property
    def support(self) -> float:
        return self.h * self.cutoff_multiple


def theta(d, params: KernelParams):
    """Truncated Gaussian weight. Accepts scalars or arrays of distances."""
    if params.h <= 0:
        raise InvalidParam("h must be positive")
    arr = np.asarray(d, dtype=np.float64)
    if np.any(arr < 0):
        raise InvalidParam("distance must be non-negative")
    w = _theta_unchecked(arr, params.h, params.support)
    if np.ndim(d) == 0:
        return float(w)
    return w


def _theta_unchecked(d, h, support):
    return np.where(d <= support, np.exp(-(d * d) / (h * h)), 0.0)


def eta(d):
    """Repulsion ``1 / (3 d^3)``."""
    arr = np.asarray(d, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise InvalidParam("eta is defined for positive distances only")
    out = 1.0 / (3.0 * arr**3)
    return float(out) if np.ndim(d) == 0 else out


def eta_slope(d):
    """``|eta'(d)| = d^-4``."""
    arr = np.asarray(d, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise InvalidParam("eta is defined for positive distances only")
    out = 1.0 / arr**4
    return float(out) if np.ndim(d) == 0 else out
