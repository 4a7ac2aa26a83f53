"""Shared independent oracles for the test suite.

Everything here is deliberately naive: exact arithmetic, exhaustive scans,
pure-Python reference algorithms. None of it shares code paths with the
package under test.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest


def reference_splitmix64(seed: int, n: int) -> list[int]:
    """The published splitmix64 recurrence, straight off the page."""
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


def fraction_moments(values) -> tuple[float, float]:
    """Exact two-pass mean and population standard deviation.

    Means and variances are computed in Fraction arithmetic (floats convert
    exactly), only the final square root happens in float.
    """
    fr = [Fraction(float(v)) for v in values]
    n = len(fr)
    mu = sum(fr) / n
    var = sum((x - mu) ** 2 for x in fr) / n
    return float(mu), math.sqrt(var)


def brute_force_distance(mask: np.ndarray, gsd: float) -> np.ndarray:
    """Per-pixel nearest-True distance in meters by scanning every pair."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    rr, cc = np.nonzero(mask)
    if rr.size == 0:
        return np.full((h, w), np.inf)
    pts = np.stack([rr, cc], axis=1).astype(np.float64)
    out = np.empty((h, w), dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    for i in range(h):
        dr = i - pts[:, 0]
        dc = cols[:, None] - pts[None, :, 1]
        d2 = dr[None, :] ** 2 + dc ** 2
        out[i] = np.sqrt(d2.min(axis=1))
    return out * gsd


def brute_force_tiles(
    labels: np.ndarray,
    distance_m: np.ndarray,
    tile_size: int,
    buffer_m: float,
    excluded: tuple[int, ...],
) -> list[tuple[float, int, int]]:
    """Eligible tiles as (clearance, row, col), ranked like the selector.

    Pure per-pixel scanning over every whole tile in the origin grid.
    """
    h, w = labels.shape
    results = []
    for r0 in range(0, h - tile_size + 1, tile_size):
        for c0 in range(0, w - tile_size + 1, tile_size):
            hits = 0
            clearance = np.inf
            for i in range(r0, r0 + tile_size):
                for j in range(c0, c0 + tile_size):
                    if labels[i, j] in excluded:
                        hits += 1
                    clearance = min(clearance, distance_m[i, j])
            if hits == 0 and clearance >= buffer_m:
                results.append((clearance, r0, c0))
    results.sort(key=lambda t: (-t[0], t[1], t[2]))
    return results


def random_softmax_stack(rng: np.random.Generator, s: int, k: int, h: int, w: int) -> np.ndarray:
    """Random valid (S, K, H, W) float32 score array (normalized over K)."""
    data = rng.random((s, k, h, w)).astype(np.float64) + 1e-3
    data /= data.sum(axis=1, keepdims=True)
    return data.astype(np.float32)


@pytest.fixture
def np_rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
