"""Runtime monitor: per-pixel moments over stochastic samples and the
conservative confidence-bound safety rule.

A pixel is safe when, for every hazard class c in the busy-road composite,

    mu_c + ci_multiplier * sigma_c <= tau

holds for the empirical moments over the sample stack. With the defaults
(ci_multiplier 3, tau 0.125) the hazard score must stay below a uniform
random guess over 8 classes even at the top of its spread.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import RegionOutOfBounds
from .taxonomy import DEFAULT_COMPOSITE
from .tensors import Rect, ScoreMapStack

DEFAULT_TAU = 0.125
DEFAULT_CI_MULTIPLIER = 3.0

SAFE = "SAFE"
UNSAFE = "UNSAFE"


@dataclass(frozen=True)
class MonitorConfig:
    tau: float = DEFAULT_TAU
    ci_multiplier: float = DEFAULT_CI_MULTIPLIER
    theta: float = 0.0          # max tolerated unsafe-pixel fraction per tile
    samples: int = 10           # expected stochastic sample count, informational
    composite: tuple[int, ...] = DEFAULT_COMPOSITE

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if self.ci_multiplier <= 0.0:
            raise ValueError(f"ci_multiplier must be positive, got {self.ci_multiplier}")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError(f"theta must be in [0, 1), got {self.theta}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if not self.composite:
            raise ValueError("composite must name at least one class")

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "ci_multiplier": self.ci_multiplier,
            "theta": self.theta,
            "samples": self.samples,
            "composite": list(self.composite),
        }


@dataclass(frozen=True)
class MomentMaps:
    """Per-pixel, per-class empirical mean and population standard deviation."""

    mu: np.ndarray      # (K, h, w) float64
    sigma: np.ndarray   # (K, h, w) float64
    sample_count: int

    def __post_init__(self) -> None:
        eps = 1e-9
        if self.mu.shape != self.sigma.shape:
            raise ValueError("mu and sigma shapes differ")
        if self.mu.min() < -eps or self.mu.max() > 1.0 + eps:
            raise ValueError("mean scores must lie in [0, 1]")
        if self.sigma.min() < -eps or self.sigma.max() > 0.5 + eps:
            raise ValueError("standard deviation of [0, 1] values must lie in [0, 0.5]")


@dataclass(frozen=True)
class MonitorVerdict:
    tile: Rect
    decision: str                # SAFE | UNSAFE
    unsafe_pixel_count: int
    warning_mask: np.ndarray     # (h, w) bool, True where the rule fails
    tau: float
    theta: float
    ci_multiplier: float = DEFAULT_CI_MULTIPLIER
    composite: tuple[int, ...] = field(default=DEFAULT_COMPOSITE)

    @property
    def unsafe_fraction(self) -> float:
        return self.unsafe_pixel_count / self.tile.area

    def as_dict(self) -> dict:
        return {
            "tile": self.tile.as_dict(),
            "decision": self.decision,
            "unsafe_pixel_count": self.unsafe_pixel_count,
            "unsafe_fraction": self.unsafe_fraction,
            "tau": self.tau,
            "theta": self.theta,
            "ci_multiplier": self.ci_multiplier,
            "composite": list(self.composite),
        }


def _check_region(stack: ScoreMapStack, region: Rect) -> None:
    if not region.within(stack.height, stack.width):
        raise RegionOutOfBounds(
            f"region {region} exceeds {stack.height}x{stack.width} image"
        )


def aggregate(stack: ScoreMapStack, region: Rect) -> MomentMaps:
    """Empirical mean and population standard deviation over the samples.

    Accumulates in float64 with a fixed sample-by-sample order so results are
    bit-identical across runs and thread counts. The divisor is S, not S-1.
    """
    _check_region(stack, region)
    s_count = stack.samples
    if s_count < 2:
        warnings.warn("single-sample stack: sigma is identically zero", stacklevel=2)
    view = stack.data[
        :, :, region.row:region.row + region.h, region.col:region.col + region.w
    ]
    acc = np.zeros(view.shape[1:], dtype=np.float64)
    for s in range(s_count):
        acc += view[s]
    mu = acc / s_count
    acc.fill(0.0)
    for s in range(s_count):
        d = view[s] - mu
        acc += d * d
    sigma = np.sqrt(acc / s_count)
    return MomentMaps(mu=mu, sigma=sigma, sample_count=s_count)


def pixel_safety(moments: MomentMaps, cfg: MonitorConfig) -> np.ndarray:
    """Boolean (h, w) map, True where every composite class passes the rule."""
    k = moments.mu.shape[0]
    for c in cfg.composite:
        if not 0 <= c < k:
            raise ValueError(f"composite class {c} not covered by {k}-class moments")
    unsafe = np.zeros(moments.mu.shape[1:], dtype=bool)
    for c in cfg.composite:
        unsafe |= moments.mu[c] + cfg.ci_multiplier * moments.sigma[c] > cfg.tau
    return ~unsafe


def verify_tile(stack: ScoreMapStack, tile: Rect, cfg: MonitorConfig) -> MonitorVerdict:
    """Aggregate the tile, apply the safety rule, and decide SAFE/UNSAFE.

    The tile is SAFE when the unsafe-pixel fraction does not exceed theta.
    """
    moments = aggregate(stack, tile)
    safe = pixel_safety(moments, cfg)
    warning = ~safe
    unsafe_count = int(warning.sum())
    decision = SAFE if unsafe_count <= cfg.theta * tile.area else UNSAFE
    return MonitorVerdict(
        tile=tile,
        decision=decision,
        unsafe_pixel_count=unsafe_count,
        warning_mask=warning,
        tau=cfg.tau,
        theta=cfg.theta,
        ci_multiplier=cfg.ci_multiplier,
        composite=cfg.composite,
    )
