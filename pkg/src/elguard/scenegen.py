"""Deterministic synthetic urban scenes with emulated stochastic score stacks.

Scenes are built from axis-aligned rectangles over a low-vegetation
background, so every downstream geometric quantity (hazard distances, tile
contents) has a closed-form ground truth. Score stacks emulate a dropout
ensemble: per sample, class logits are a one-hot gain plus gaussian noise,
pushed through a softmax.

The "ood" noise mode manufactures the failure a runtime monitor exists to
catch: on a seeded fraction of ground-truth busy-road pixels the dominant
class is swapped to a landable one (so a single-sample segmentation misses
the hazard), while the hazard-class score of every sample is clamped to a
floor above the monitor's default threshold (so the sample statistics cannot
miss it).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import SpecInfeasible
from .monitor import DEFAULT_TAU
from .taxonomy import (
    BUILDING,
    DEFAULT_COMPOSITE,
    HUMAN,
    LOW_VEGETATION,
    MOVING_CAR,
    NUM_CLASSES,
    ROAD,
    STATIC_CAR,
    TREE,
)
from .tensors import RandomStream, ScoreMapStack

IN_DISTRIBUTION = "in_distribution"
OOD = "ood"

# OOD misses flip hazard pixels to classes a landing-zone selector would
# accept; flipping to e.g. "building" would hide the pixel from the monitor
# by excluding its tile outright.
_FLIP_TARGETS = (0, TREE, LOW_VEGETATION)  # clutter, tree, low vegetation


@dataclass(frozen=True)
class SceneSpec:
    """Rectangle counts and physical sizes for one synthetic scene.

    Road bands span the full image width (or height) with a thickness given
    as a fraction of the crossed dimension. All other rectangle sizes are
    drawn uniformly from per-class ranges in meters and converted to pixels
    through the ground sampling distance.
    """

    height: int = 256
    width: int = 256
    gsd: float = 0.5
    road_bands: int = 1
    road_fraction: float = 0.08
    buildings: int = 3
    building_m: tuple[float, float] = (10.0, 30.0)
    trees: int = 6
    tree_m: tuple[float, float] = (2.0, 8.0)
    static_cars: int = 2
    moving_cars: int = 2
    car_m: tuple[float, float] = (2.0, 5.0)
    humans: int = 2
    human_m: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self) -> None:
        if self.height < 32 or self.width < 32:
            raise ValueError("scene must be at least 32x32 pixels")
        if self.gsd <= 0.0:
            raise ValueError("gsd must be positive")
        if not 0.0 <= self.road_fraction <= 1.0:
            raise ValueError("road_fraction must be in [0, 1]")
        for name in ("road_bands", "buildings", "trees", "static_cars", "moving_cars", "humans"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("building_m", "tree_m", "car_m", "human_m"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < min <= max")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GroundTruthScene:
    labels: np.ndarray  # (H, W) uint8, values < NUM_CLASSES
    gsd: float
    num_classes: int = NUM_CLASSES

    def __post_init__(self) -> None:
        if self.labels.ndim != 2:
            raise ValueError("labels must be a 2-d map")
        if self.labels.size and int(self.labels.max()) >= self.num_classes:
            raise ValueError("label out of range")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def mask_of(self, classes: tuple[int, ...]) -> np.ndarray:
        return np.isin(self.labels, classes)


@dataclass(frozen=True)
class NoiseSpec:
    """Dropout-ensemble emulation parameters."""

    mode: str = IN_DISTRIBUTION
    logit_gain: float = 10.0
    logit_noise_sd: float = 0.5
    ood_road_floor: float = 0.05
    samples: int = 10
    ood_flip_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in (IN_DISTRIBUTION, OOD):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.logit_gain <= 0.0:
            raise ValueError("logit_gain must be positive")
        if self.logit_noise_sd < 0.0:
            raise ValueError("logit_noise_sd must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.ood_road_floor < 0.0:
            raise ValueError("ood_road_floor must be non-negative")
        if self.mode == OOD and self.ood_road_floor == 0.0:
            raise ValueError("ood mode requires a positive ood_road_floor")
        if not 0.0 <= self.ood_flip_fraction <= 1.0:
            raise ValueError("ood_flip_fraction must be in [0, 1]")

    def as_dict(self) -> dict:
        return asdict(self)


def _rect_sides_px(stream: RandomStream, size_m: tuple[float, float], gsd: float) -> tuple[int, int]:
    lo, hi = size_m
    h_m = lo + (hi - lo) * stream.uniform()
    w_m = lo + (hi - lo) * stream.uniform()
    return max(1, round(h_m / gsd)), max(1, round(w_m / gsd))


def _check_feasible(spec: SceneSpec) -> None:
    for name in ("building_m", "tree_m", "car_m", "human_m"):
        _, hi = getattr(spec, name)
        side = max(1, round(hi / spec.gsd))
        if side > spec.height or side > spec.width:
            raise SpecInfeasible(
                f"{name} up to {hi} m is {side} px at gsd {spec.gsd}, "
                f"larger than the {spec.height}x{spec.width} image"
            )


def generate_scene(spec: SceneSpec, seed: int) -> GroundTruthScene:
    """Place seeded rectangles over a low-vegetation background.

    Placement order is trees, buildings, road bands, static cars, moving
    cars, humans; later rectangles overwrite earlier ones. The draw sequence
    is fixed, so the label map is a pure function of (spec, seed).
    """
    _check_feasible(spec)
    stream = RandomStream(seed)
    labels = np.full((spec.height, spec.width), LOW_VEGETATION, dtype=np.uint8)

    def place_rects(count: int, size_m: tuple[float, float], cls: int) -> None:
        for _ in range(count):
            h, w = _rect_sides_px(stream, size_m, spec.gsd)
            r0 = stream.randint(spec.height - h + 1)
            c0 = stream.randint(spec.width - w + 1)
            labels[r0:r0 + h, c0:c0 + w] = cls

    place_rects(spec.trees, spec.tree_m, TREE)
    place_rects(spec.buildings, spec.building_m, BUILDING)
    for _ in range(spec.road_bands):
        horizontal = stream.randint(2) == 0
        dim = spec.height if horizontal else spec.width
        thickness = round(spec.road_fraction * dim)
        if thickness == 0:
            continue
        origin = stream.randint(dim - thickness + 1)
        if horizontal:
            labels[origin:origin + thickness, :] = ROAD
        else:
            labels[:, origin:origin + thickness] = ROAD
    place_rects(spec.static_cars, spec.car_m, STATIC_CAR)
    place_rects(spec.moving_cars, spec.car_m, MOVING_CAR)
    place_rects(spec.humans, spec.human_m, HUMAN)
    return GroundTruthScene(labels=labels, gsd=spec.gsd)


def _clamp_floor_f32(floor: float) -> np.float32:
    """Smallest float32 that is >= floor when read back as float64."""
    target = np.float32(floor)
    if float(target) < floor:
        target = np.nextafter(target, np.float32(np.inf))
    return target


def sample_scores(scene: GroundTruthScene, noise: NoiseSpec, seed: int) -> ScoreMapStack:
    """Emulate a stochastic ensemble over the scene's ground truth.

    Per sample and pixel: logits = gain * onehot(class) + N(0, sd) for each
    class, scores = softmax(logits). In ood mode the hazard construction
    described in the module docstring is applied afterwards.
    """
    stream = RandomStream(seed)
    h, w = scene.height, scene.width
    k = scene.num_classes
    s_count = noise.samples
    labels = scene.labels

    flip_rows = flip_cols = flip_cls = None
    busy_rows = busy_cols = None
    if noise.mode == OOD:
        busy = scene.mask_of(DEFAULT_COMPOSITE)
        busy_rows, busy_cols = np.nonzero(busy)
        n_busy = busy_rows.size
        flip = stream.take_uniform(n_busy) < noise.ood_flip_fraction
        flip_rows, flip_cols = busy_rows[flip], busy_cols[flip]
        pick = stream.take_uniform(int(flip.sum()))
        idx = np.minimum((pick * len(_FLIP_TARGETS)).astype(np.intp), len(_FLIP_TARGETS) - 1)
        flip_cls = np.asarray(_FLIP_TARGETS, dtype=np.uint8)[idx]

    # The class the emulated model is "confident" about: ground truth, except
    # at flipped pixels where the model systematically misses the hazard.
    eff_labels = labels.copy()
    if flip_rows is not None and flip_rows.size:
        eff_labels[flip_rows, flip_cols] = flip_cls

    onehot = (eff_labels[None, :, :] == np.arange(k)[:, None, None]).astype(np.float64)
    logits = noise.logit_gain * onehot[None, :, :, :]
    if noise.logit_noise_sd > 0.0:
        gauss = stream.take_gauss(s_count * k * h * w).reshape(s_count, k, h, w)
        logits = logits + noise.logit_noise_sd * gauss
    else:
        logits = np.broadcast_to(logits, (s_count, k, h, w)).copy()

    logits -= logits.max(axis=1, keepdims=True)
    scores = np.exp(logits)
    scores /= scores.sum(axis=1, keepdims=True)

    if noise.mode == OOD:
        base = float(_clamp_floor_f32(DEFAULT_TAU + noise.ood_road_floor))
        jitter = stream.take_uniform(s_count * busy_rows.size).reshape(s_count, -1)
        floors = base + 0.1 * noise.ood_road_floor * jitter
        cls = labels[busy_rows, busy_cols]
        cur = scores[:, cls, busy_rows, busy_cols]            # (S, n_busy)
        new = np.maximum(cur, floors)
        factor = np.ones_like(cur)
        np.divide(1.0 - new, 1.0 - cur, out=factor, where=cur < 1.0)
        scores[:, :, busy_rows, busy_cols] *= factor[:, None, :]
        scores[:, cls, busy_rows, busy_cols] = new

    return ScoreMapStack(scores.astype(np.float32))
