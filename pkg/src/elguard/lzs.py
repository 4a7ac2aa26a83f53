"""Landing-zone selection: hazard standoff distances, drift buffers, and
conservative tile ranking.

Distances are exact Euclidean, computed by the classic two-pass squared-
distance transform (per-column scans, then a per-row lower envelope of
parabolas), and scaled to meters through the ground sampling distance so
they share units with the drift buffer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TileLargerThanImage
from .segcore import SegmentationMap
from .taxonomy import DEFAULT_EXCLUDED
from .tensors import Rect


@dataclass(frozen=True)
class DistanceMap:
    """Per-pixel Euclidean distance in meters to the nearest busy-road pixel.

    Pixels are infinity when the image contains no busy-road pixel at all.
    """

    meters: np.ndarray  # (H, W) float64
    gsd: float

    @property
    def height(self) -> int:
        return self.meters.shape[0]

    @property
    def width(self) -> int:
        return self.meters.shape[1]


@dataclass(frozen=True)
class DriftModel:
    """Linear descent-drift model: worst-case lateral drift plus a margin."""

    altitude_m: float
    descent_rate_ms: float
    wind_speed_ms: float
    margin_m: float = 0.0

    def __post_init__(self) -> None:
        values = (self.altitude_m, self.descent_rate_ms, self.wind_speed_ms, self.margin_m)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("drift model parameters must be finite")
        if self.descent_rate_ms <= 0.0:
            raise ValueError("descent rate must be positive")
        if self.altitude_m < 0.0 or self.wind_speed_ms < 0.0 or self.margin_m < 0.0:
            raise ValueError("altitude, wind speed, and margin must be non-negative")

    def as_dict(self) -> dict:
        return {
            "altitude_m": self.altitude_m,
            "descent_rate_ms": self.descent_rate_ms,
            "wind_speed_ms": self.wind_speed_ms,
            "margin_m": self.margin_m,
        }


@dataclass(frozen=True)
class LandingCandidate:
    tile: Rect
    clearance_m: float          # min hazard distance over the tile
    buffer_required_m: float
    rank: int                   # 1 = best
    excluded_class_hits: int

    def as_dict(self) -> dict:
        return {
            "tile": self.tile.as_dict(),
            "clearance_m": None if math.isinf(self.clearance_m) else self.clearance_m,
            "buffer_required_m": self.buffer_required_m,
            "rank": self.rank,
            "excluded_class_hits": self.excluded_class_hits,
        }


def buffer_radius(drift: DriftModel) -> float:
    """Required standoff in meters: descent-time drift plus the margin."""
    return (drift.altitude_m / drift.descent_rate_ms) * drift.wind_speed_ms + drift.margin_m


def _column_distances(mask: np.ndarray) -> np.ndarray:
    """Per pixel, distance in rows to the nearest masked pixel in its column."""
    h, _ = mask.shape
    d = np.empty(mask.shape, dtype=np.float64)
    run = np.full(mask.shape[1], np.inf)
    for i in range(h):
        run = np.where(mask[i], 0.0, run + 1.0)
        d[i] = run
    for i in range(h - 2, -1, -1):
        np.minimum(d[i], d[i + 1] + 1.0, out=d[i])
    return d


def _envelope_1d(f: np.ndarray) -> np.ndarray:
    """1-d squared-distance transform of a sampled function f (may hold inf)."""
    n = f.size
    out = np.full(n, np.inf)
    v = np.zeros(n, dtype=np.intp)
    z = np.zeros(n + 1, dtype=np.float64)
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == np.inf:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        s = (fq + q * q - f[v[k]] - v[k] * v[k]) / (2 * q - 2 * v[k])
        while s <= z[k]:
            k -= 1
            s = (fq + q * q - f[v[k]] - v[k] * v[k]) / (2 * q - 2 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    if k < 0:
        return out
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        out[q] = (q - p) * (q - p) + f[p]
    return out


def distance_transform(busy_mask: np.ndarray, gsd: float) -> DistanceMap:
    """Exact Euclidean distance (meters) to the nearest True pixel."""
    if gsd <= 0.0:
        raise ValueError("gsd must be positive")
    mask = np.asarray(busy_mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-d")
    dcol = _column_distances(mask)
    d2 = np.square(dcol)
    for i in range(mask.shape[0]):
        d2[i] = _envelope_1d(d2[i])
    return DistanceMap(meters=np.sqrt(d2) * gsd, gsd=gsd)


def select_candidates(
    seg: SegmentationMap,
    dist: DistanceMap,
    tile_size: int,
    buffer_m: float,
    excluded_classes: tuple[int, ...] = DEFAULT_EXCLUDED,
) -> list[LandingCandidate]:
    """Rank landing tiles by hazard clearance.

    The image is cut into a tile_size grid anchored at the origin; partial
    edge tiles are dropped since they cannot be certified whole. A tile is
    eligible when it contains no excluded-class pixel and its minimum hazard
    distance is at least buffer_m. Eligible tiles are ordered by decreasing
    clearance, ties by tile origin.
    """
    if tile_size <= 0:
        raise ValueError("tile_size must be positive")
    if buffer_m < 0.0:
        raise ValueError("buffer must be non-negative")
    h, w = seg.labels.shape
    if dist.meters.shape != (h, w):
        raise ValueError("segmentation and distance map shapes differ")
    if tile_size > h or tile_size > w:
        raise TileLargerThanImage(f"tile {tile_size} px exceeds {h}x{w} image")

    nr, nc = h // tile_size, w // tile_size
    ch, cw = nr * tile_size, nc * tile_size
    excl = np.isin(seg.labels[:ch, :cw], excluded_classes)
    hits = excl.reshape(nr, tile_size, nc, tile_size).sum(axis=(1, 3))
    clearance = dist.meters[:ch, :cw].reshape(nr, tile_size, nc, tile_size).min(axis=(1, 3))

    rows, cols = np.nonzero((hits == 0) & (clearance >= buffer_m))
    order = sorted(range(rows.size), key=lambda i: (-clearance[rows[i], cols[i]], rows[i], cols[i]))
    candidates = []
    for rank, i in enumerate(order, start=1):
        r, c = int(rows[i]), int(cols[i])
        candidates.append(
            LandingCandidate(
                tile=Rect(r * tile_size, c * tile_size, tile_size, tile_size),
                clearance_m=float(clearance[r, c]),
                buffer_required_m=buffer_m,
                rank=rank,
                excluded_class_hits=int(hits[r, c]),
            )
        )
    return candidates
