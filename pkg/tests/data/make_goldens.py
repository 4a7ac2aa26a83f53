#!/usr/bin/env python3
"""Regenerate the committed golden files.

Uses struct directly (not the package) so the bytes are pinned by this
script, not by the code under test. Run from the repo root:

    python tests/data/make_goldens.py
"""

import struct
from pathlib import Path

HERE = Path(__file__).parent

# ELSM: S=2, K=2, H=2, W=2, payload values exact in float32.
CLASS0 = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]

def main() -> None:
    header = struct.pack("<4sHBBIIII", b"ELSM", 1, 0, 0, 2, 2, 2, 2)
    class1 = [1.0 - v for v in CLASS0]
    # sample-major, then class, then row-major pixels
    values = CLASS0[:4] + class1[:4] + CLASS0[4:] + class1[4:]
    payload = struct.pack("<16f", *values)
    (HERE / "golden.elsm").write_bytes(header + payload)

    labels = bytes([0, 1, 2, 3, 4, 5])
    (HERE / "golden_labels.pgm").write_bytes(b"P5\n3 2\n255\n" + labels)

    warning = bytes([0, 255, 255, 0])
    (HERE / "golden_warning.pgm").write_bytes(b"P5\n2 2\n255\n" + warning)
    print("golden files written to", HERE)


if __name__ == "__main__":
    main()
