"""Point-estimate segmentation from a single stochastic sample.

This is the fast, non-statistical half of the safety pattern: one sample's
argmax labels plus the derived busy-road mask. Uncertainty handling lives in
the monitor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PaletteSizeMismatch, SampleOutOfRange
from .taxonomy import DEFAULT_COMPOSITE, NUM_CLASSES
from .tensors import ScoreMapStack, write_ppm

# RGB per class index: clutter, building, road, static car, moving car,
# tree, low vegetation, human.
DEFAULT_PALETTE = (
    (0, 0, 0),
    (128, 0, 0),
    (128, 64, 128),
    (192, 0, 192),
    (64, 0, 128),
    (0, 128, 0),
    (128, 128, 0),
    (64, 64, 0),
)


def validate_composite(composite: tuple[int, ...], num_classes: int) -> None:
    if not composite:
        raise ValueError("busy-road composite must be non-empty")
    for c in composite:
        if not 0 <= c < num_classes:
            raise ValueError(f"composite class {c} outside 0..{num_classes - 1}")


@dataclass(frozen=True)
class SegmentationMap:
    labels: np.ndarray      # (H, W) integer class indices
    busy_road: np.ndarray   # (H, W) bool, True on composite classes
    num_classes: int = NUM_CLASSES
    composite: tuple[int, ...] = DEFAULT_COMPOSITE

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def argmax_segment(
    stack: ScoreMapStack,
    sample_index: int = 0,
    composite: tuple[int, ...] = DEFAULT_COMPOSITE,
) -> SegmentationMap:
    """Label every pixel with the highest-scoring class of one sample.

    Ties break toward the lowest class index (argmax returns the first
    maximum), which lands on clutter for a fully tied pixel.
    """
    if not 0 <= sample_index < stack.samples:
        raise SampleOutOfRange(
            f"sample {sample_index} out of range for {stack.samples}-sample stack"
        )
    validate_composite(composite, stack.classes)
    labels = np.argmax(stack.data[sample_index], axis=0).astype(np.uint8)
    busy = np.isin(labels, composite)
    return SegmentationMap(
        labels=labels, busy_road=busy, num_classes=stack.classes, composite=composite
    )


def colorize(seg: SegmentationMap, palette: tuple[tuple[int, int, int], ...] = DEFAULT_PALETTE) -> bytes:
    """Render labels to PPM bytes, one palette color per class."""
    if len(palette) != seg.num_classes:
        raise PaletteSizeMismatch(
            f"palette has {len(palette)} entries for {seg.num_classes} classes"
        )
    lut = np.asarray(palette, dtype=np.uint8)
    return write_ppm(lut[seg.labels])
