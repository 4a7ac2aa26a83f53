"""The 8-class aerial-scene taxonomy used across the package.

Index assignments are load-bearing: label maps, palettes, and the busy-road
composite all refer to these values.
"""

from __future__ import annotations

CLUTTER = 0
BUILDING = 1
ROAD = 2
STATIC_CAR = 3
MOVING_CAR = 4
TREE = 5
LOW_VEGETATION = 6
HUMAN = 7

NUM_CLASSES = 8

CLASS_NAMES = (
    "clutter",
    "building",
    "road",
    "static_car",
    "moving_car",
    "tree",
    "low_vegetation",
    "human",
)

# Classes treated as the fatal-landing hazard: pavement plus anything on it.
DEFAULT_COMPOSITE = (ROAD, STATIC_CAR, MOVING_CAR)

# Classes that must never appear inside a landing tile: the hazard composite
# plus infrastructure and people.
DEFAULT_EXCLUDED = (BUILDING, ROAD, STATIC_CAR, MOVING_CAR, HUMAN)
