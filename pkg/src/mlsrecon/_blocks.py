"""Padded neighbour blocks and order-exact reductions over them.

Blocks are component-major with queries innermost: coordinates are stored as
(3, K, B) for B queries with up to K neighbours each, and a (K, B) mask marks
real entries. Padding entries hold zeros.
"""

from __future__ import annotations

import numpy as np


def seqsum(x: np.ndarray) -> np.ndarray:
    """Sum over axis -2 strictly in order ``((x0 + x1) + x2) + ...``.

    With the query axis innermost and contiguous, numpy reduces the neighbour
    axis by plain accumulation. A single-query block would make the neighbour
    axis innermost and switch numpy to pairwise summation, so it is padded
    with a zero column first. Zero padding is exact.
    """
    x = np.ascontiguousarray(x)
    if x.shape[-2] == 0:
        return np.zeros(x.shape[:-2] + x.shape[-1:])
    if x.shape[-1] < 2:
        # pad to two columns; the extra zero column is discarded
        pad = np.zeros(x.shape[:-1] + (2,))
        pad[..., :1] = x
        return np.add.reduce(pad, axis=-2)[..., :1]
    return np.add.reduce(x, axis=-2)


def gather(points: np.ndarray, pos_lists) -> tuple:
    """Pad per-query neighbour position lists into a (3, K, B) block."""
    B = len(pos_lists)
    counts = np.fromiter((len(p) for p in pos_lists), dtype=np.int64, count=B)
    K = max(int(counts.max()) if B else 0, 1)
    valid = np.arange(K)[:, None] < counts[None, :]
    flat = np.zeros((B, K), dtype=np.int64)
    if B and counts.sum():
        flat[valid.T] = np.concatenate([p for p in pos_lists if len(p)])
    cols = np.ascontiguousarray(points.T)
    P = np.where(valid[None], cols[:, flat.T], 0.0)
    return P, valid
