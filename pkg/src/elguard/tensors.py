"""Bit-exact containers for stochastic score stacks, plus the deterministic PRNG.

The on-disk container is ELSM: a 24-byte little-endian header followed by a
raw float32 payload.

    offset  size  field
    0       4     magic, ASCII "ELSM"
    4       2     version, u16 (currently 1)
    6       1     dtype, u8 (0 = float32 little-endian)
    7       1     flags, u8 (must be 0)
    8       4     S, u32  number of stochastic samples
    12      4     K, u32  number of classes
    16      4     H, u32  image height in pixels
    20      4     W, u32  image width in pixels
    24      ...   S*K*H*W float32 values, sample-major then class, row, column

Masks are written as binary PGM (P5) and color images as binary PPM (P6).

Randomness everywhere in this package flows from splitmix64, a tiny published
generator that is trivially reproducible across languages and platforms.
Uniform doubles take the top 53 bits of each output; gaussians come from the
Box-Muller transform over two consecutive uniforms.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    NonFiniteScore,
    ScoreOutOfRange,
    ScoresNotNormalized,
    SizeMismatch,
    UnsupportedDtype,
    UnsupportedFlags,
    UnsupportedVersion,
    ValueOutOfRange,
)

ELSM_MAGIC = b"ELSM"
ELSM_VERSION = 1
ELSM_DTYPE_F32 = 0
_HEADER = struct.Struct("<4sHBBIIII")  # 24 bytes

SCORE_SUM_TOL = 1e-5


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: origin (row, col), extent (h, w)."""

    row: int
    col: int
    h: int
    w: int

    def __post_init__(self) -> None:
        if self.h <= 0 or self.w <= 0:
            raise ValueError(f"rectangle extent must be positive, got {self.h}x{self.w}")
        if self.row < 0 or self.col < 0:
            raise ValueError(f"rectangle origin must be non-negative, got ({self.row}, {self.col})")

    def within(self, height: int, width: int) -> bool:
        return self.row + self.h <= height and self.col + self.w <= width

    @property
    def area(self) -> int:
        return self.h * self.w

    def as_dict(self) -> dict:
        return {"row": self.row, "col": self.col, "h": self.h, "w": self.w}


@dataclass(frozen=True)
class ScoreMapStack:
    """S stochastic samples of K-class score maps over an H x W pixel grid.

    `data` has shape (S, K, H, W), dtype float32. Scores are softmax outputs:
    finite, in [0, 1], and summing to 1 over classes for every (sample, pixel).
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", arr)
        if arr.ndim != 4:
            raise ValueError(f"expected 4-d (S, K, H, W) array, got shape {arr.shape}")
        s, k, _, _ = arr.shape
        if s < 1:
            raise ValueError("need at least one sample")
        if k < 2:
            raise ValueError("need at least two classes")
        if not np.isfinite(arr).all():
            raise NonFiniteScore("stack contains NaN or infinite scores")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ScoreOutOfRange("scores must lie in [0, 1]")
        sums = arr.sum(axis=1, dtype=np.float64)
        err = np.abs(sums - 1.0).max()
        if err > SCORE_SUM_TOL:
            raise ScoresNotNormalized(
                f"per-pixel class scores must sum to 1 within {SCORE_SUM_TOL}, worst error {err:.3g}"
            )

    @property
    def samples(self) -> int:
        return self.data.shape[0]

    @property
    def classes(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]


def encode_stack(stack: ScoreMapStack) -> bytes:
    """Serialize a stack to ELSM bytes. decode_stack inverts this bit-for-bit."""
    s, k, h, w = stack.data.shape
    header = _HEADER.pack(ELSM_MAGIC, ELSM_VERSION, ELSM_DTYPE_F32, 0, s, k, h, w)
    payload = np.ascontiguousarray(stack.data, dtype="<f4").tobytes()
    return header + payload


def decode_stack(buf: bytes) -> ScoreMapStack:
    if len(buf) < _HEADER.size:
        raise SizeMismatch(f"truncated header: {len(buf)} bytes, need {_HEADER.size}")
    magic, version, dtype, flags, s, k, h, w = _HEADER.unpack_from(buf, 0)
    if magic != ELSM_MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != ELSM_VERSION:
        raise UnsupportedVersion(f"version {version} not supported")
    if dtype != ELSM_DTYPE_F32:
        raise UnsupportedDtype(f"dtype code {dtype} not supported")
    if flags != 0:
        raise UnsupportedFlags(f"flags {flags:#04x} not supported")
    expected = s * k * h * w
    payload = buf[_HEADER.size:]
    if len(payload) != expected * 4:
        raise SizeMismatch(
            f"header declares {expected} float32 values ({expected * 4} bytes), payload has {len(payload)} bytes"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(s, k, h, w)
    return ScoreMapStack(data)


# ---------------------------------------------------------------------------
# Netpbm mask output (PGM P5, PPM P6)
# ---------------------------------------------------------------------------

def write_pgm(gray: np.ndarray) -> bytes:
    """Encode an (H, W) uint8 array as binary PGM."""
    arr = np.asarray(gray)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-d gray image, got shape {arr.shape}")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + arr.astype(np.uint8).tobytes()


def write_ppm(rgb: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as binary PPM."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) color image, got shape {arr.shape}")
    h, w, _ = arr.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + arr.astype(np.uint8).tobytes()


def write_mask(mask: np.ndarray, kind: str, num_classes: int = 8) -> bytes:
    """Encode a per-pixel byte map as PGM after validating it for `kind`.

    kind "labels": values must be class indices < num_classes.
    kind "warning": values must be 0 or 255.
    """
    arr = np.asarray(mask)
    if kind == "labels":
        if arr.size and int(arr.max()) >= num_classes:
            raise ValueOutOfRange(
                f"label {int(arr.max())} out of range for {num_classes} classes"
            )
    elif kind == "warning":
        if arr.size and not np.isin(arr, (0, 255)).all():
            raise ValueOutOfRange("warning mask values must be 0 or 255")
    else:
        raise ValueError(f"unknown mask kind {kind!r}")
    return write_pgm(arr)


def _parse_netpbm(buf: bytes, magic: bytes, channels: int) -> np.ndarray:
    if not buf.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    # Tokenize the header: magic, width, height, maxval. '#' starts a comment.
    tokens: list[bytes] = []
    pos = len(magic)
    while len(tokens) < 3:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        tokens.append(buf[start:pos])
    pos += 1  # single whitespace byte separates header from raster
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    count = width * height * channels
    raster = buf[pos:pos + count]
    if len(raster) != count:
        raise ValueError(f"raster has {len(raster)} bytes, expected {count}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width)
    return arr.reshape(height, width, channels)


def read_pgm(buf: bytes) -> np.ndarray:
    return _parse_netpbm(buf, b"P5", 1)


def read_ppm(buf: bytes) -> np.ndarray:
    return _parse_netpbm(buf, b"P6", 3)


# ---------------------------------------------------------------------------
# splitmix64 PRNG
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class Rng64:
    """Immutable splitmix64 state; every step returns a fresh state."""

    state: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "state", self.state & _MASK64)


def rng_next(rng: Rng64) -> tuple[int, Rng64]:
    """Advance splitmix64 one step: (64-bit output, next state)."""
    state = (rng.state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return z, Rng64(state)


def rng_uniform(rng: Rng64) -> tuple[float, Rng64]:
    """Uniform double in [0, 1) from the top 53 bits of one output."""
    bits, rng = rng_next(rng)
    return (bits >> 11) * _INV_2_53, rng


def rng_gauss(rng: Rng64) -> tuple[float, Rng64]:
    """Standard normal via Box-Muller over two uniforms.

    Uses 1 - u1 inside the log so a zero draw cannot reach log(0).
    """
    u1, rng = rng_uniform(rng)
    u2, rng = rng_uniform(rng)
    r = math.sqrt(-2.0 * math.log(1.0 - u1))
    return r * math.cos(2.0 * math.pi * u2), rng


def bulk_u64(rng: Rng64, n: int) -> tuple[np.ndarray, Rng64]:
    """Next n outputs as a uint64 array, identical to n rng_next calls.

    splitmix64's state advances by a fixed additive constant, so the n states
    are seed + (1..n) * gamma and the outputs vectorize cleanly.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    steps = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(rng.state) + steps * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return z, Rng64((rng.state + n * _GAMMA) & _MASK64)


def bulk_uniform(rng: Rng64, n: int) -> tuple[np.ndarray, Rng64]:
    bits, rng = bulk_u64(rng, n)
    return (bits >> np.uint64(11)).astype(np.float64) * _INV_2_53, rng


def bulk_gauss(rng: Rng64, n: int) -> tuple[np.ndarray, Rng64]:
    """n standard normals, consuming uniforms in the same order as rng_gauss."""
    u, rng = bulk_uniform(rng, 2 * n)
    u1 = u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(1.0 - u1))
    return r * np.cos(2.0 * np.pi * u2), rng


class RandomStream:
    """Mutable convenience cursor over the pure splitmix64 functions."""

    def __init__(self, seed: int) -> None:
        self._rng = Rng64(seed)

    @property
    def state(self) -> Rng64:
        return self._rng

    def next_u64(self) -> int:
        value, self._rng = rng_next(self._rng)
        return value

    def uniform(self) -> float:
        value, self._rng = rng_uniform(self._rng)
        return value

    def gauss(self) -> float:
        value, self._rng = rng_gauss(self._rng)
        return value

    def randint(self, n: int) -> int:
        """Integer in [0, n). Modulo bias is ~n/2**64, irrelevant for small n."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def take_uniform(self, n: int) -> np.ndarray:
        values, self._rng = bulk_uniform(self._rng, n)
        return values

    def take_gauss(self, n: int) -> np.ndarray:
        values, self._rng = bulk_gauss(self._rng, n)
        return values
