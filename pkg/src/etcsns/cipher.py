"""Block scrambling encryption for Encryption-then-Compression.

The image is tiled into ``bx`` x ``by`` blocks and four keyed operations
are applied: block permutation, per-block rotation/flip, per-block
negative-positive transform and per-block color channel shuffle.
Every key stream is a SplitMix64 generator, so results are reproducible
bit-for-bit in any language.
"""

from __future__ import annotations

import itertools
import re
import secrets
from dataclasses import dataclass

import numpy as np

from .image import BlockGrid, RasterImage

MASK64 = (1 << 64) - 1

PERMUTE = "permute"
GEOMETRY = "geometry"
NEGPOS = "negpos"
SHUFFLE = "shuffle"
ALL_STEPS = frozenset({PERMUTE, GEOMETRY, NEGPOS, SHUFFLE})

# Channel orders in lexicographic order: RGB, RBG, GRB, GBR, BRG, BGR.
CHANNEL_ORDERS = tuple(itertools.permutations(range(3)))

GEOMETRY_NAMES = ("identity", "rot90", "rot180", "rot270",
                  "flip_h", "flip_v", "transpose", "anti_transpose")
_GEOMETRY_INVERSE = (0, 3, 2, 1, 4, 5, 6, 7)


class KeyStream:
    """SplitMix64 pseudo-random stream."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_below(self, m: int) -> int:
        """Uniform integer in ``[0, m)`` by rejection on the top ``ceil(log2 m)`` bits.

        ``m == 1`` returns 0 without consuming a draw.
        """
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        bits = (m - 1).bit_length()
        if bits == 0:
            return 0
        while True:
            x = self.next() >> (64 - bits)
            if x < m:
                return x

    def draws(self, m: int, count: int) -> np.ndarray:
        return np.array([self.next_below(m) for _ in range(count)], dtype=np.intp)


@dataclass(frozen=True)
class EtcKey:
    """Four independent 64-bit subkeys.

    ``k1`` drives the block permutation, ``k2`` the rotation/flip codes,
    ``k3`` the negative-positive bits and ``k4`` the channel shuffle.
    """

    k1: int
    k2: int
    k3: int
    k4: int

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    @classmethod
    def from_master(cls, master: int) -> "EtcKey":
        """Expand one 64-bit value: subkey ``i`` is the first draw of ``KeyStream(master ^ i)``."""
        master &= MASK64
        return cls(*(KeyStream(master ^ tag).next() for tag in (1, 2, 3, 4)))

    @classmethod
    def random(cls) -> "EtcKey":
        return cls(*(secrets.randbits(64) for _ in range(4)))

    def to_text(self) -> str:
        return "".join(f"K{i}={v:016x}\n" for i, v in
                       enumerate((self.k1, self.k2, self.k3, self.k4), 1))

    @classmethod
    def from_text(cls, text: str) -> "EtcKey":
        """Parse the ``K1=<16 hex digits>`` ... ``K4=...`` key file format."""
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            m = re.fullmatch(r"K([1-4])\s*=\s*([0-9a-fA-F]{16})", line)
            if m is None:
                raise ValueError(f"malformed key file line {lineno}: {line!r}")
            if m.group(1) in values:
                raise ValueError(f"duplicate K{m.group(1)} on line {lineno}")
            values[m.group(1)] = int(m.group(2), 16)
        missing = [f"K{i}" for i in "1234" if i not in values]
        if missing:
            raise ValueError(f"key file is missing {', '.join(missing)}")
        return cls(*(values[i] for i in "1234"))


def permutation_from_key(k1: int, n: int) -> np.ndarray:
    """Keyed Fisher-Yates shuffle of ``range(n)``.

    The result maps destination block index to source block index.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    stream = KeyStream(k1)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = stream.next_below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.intp)


def transform_block_geometry(block: np.ndarray, code: int, inverse: bool = False) -> np.ndarray:
    """Apply one of the 8 symmetries of a square to an ``(..., by, bx, C)`` block.

    Codes: 0 identity, 1 rot90, 2 rot180, 3 rot270 (counter-clockwise),
    4 horizontal flip, 5 vertical flip, 6 transpose, 7 anti-transpose.
    """
    if not 0 <= code <= 7:
        raise ValueError(f"geometry code must be in 0..7, got {code}")
    block = np.asarray(block)
    ay, ax = block.ndim - 3, block.ndim - 2
    if code in (1, 3, 6, 7) and block.shape[ay] != block.shape[ax]:
        raise ValueError(f"{GEOMETRY_NAMES[code]} needs a square block, got "
                         f"{block.shape[ax]}x{block.shape[ay]}")
    if inverse:
        code = _GEOMETRY_INVERSE[code]
    if code == 0:
        return block
    if code in (1, 2, 3):
        return np.rot90(block, code, axes=(ay, ax))
    if code == 4:
        return np.flip(block, axis=ax)
    if code == 5:
        return np.flip(block, axis=ay)
    t = np.swapaxes(block, ay, ax)
    return t if code == 6 else np.rot90(t, 2, axes=(ay, ax))


def _to_blocks(pixels: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """``(H, W, 3)`` -> ``(n, by, bx, 3)`` in row-major block order."""
    b = pixels.reshape(grid.rows, grid.by, grid.cols, grid.bx, 3)
    return b.transpose(0, 2, 1, 3, 4).reshape(grid.n, grid.by, grid.bx, 3)


def _from_blocks(blocks: np.ndarray, grid: BlockGrid) -> np.ndarray:
    b = blocks.reshape(grid.rows, grid.cols, grid.by, grid.bx, 3)
    return b.transpose(0, 2, 1, 3, 4).reshape(grid.rows * grid.by, grid.cols * grid.bx, 3)


def _grid_for(img: RasterImage, bx: int, by: int) -> BlockGrid:
    grid = BlockGrid.for_size(img.width, img.height, bx, by)
    if img.width % bx or img.height % by:
        raise ValueError(f"{img.width}x{img.height} is not a multiple of the "
                         f"{bx}x{by} block size; crop first")
    if bx != by:
        raise ValueError(f"only square blocks are supported, got {bx}x{by}")
    return grid


@dataclass(frozen=True)
class KeySchedule:
    """All per-block draws for one image, precomputed in block-index order."""

    permutation: np.ndarray
    geometry: np.ndarray
    negpos: np.ndarray
    shuffle: np.ndarray

    @classmethod
    def expand(cls, key: EtcKey, n: int) -> "KeySchedule":
        return cls(permutation_from_key(key.k1, n),
                   KeyStream(key.k2).draws(8, n),
                   KeyStream(key.k3).draws(2, n),
                   KeyStream(key.k4).draws(6, n))


def _apply_geometry(blocks: np.ndarray, codes: np.ndarray, inverse: bool) -> np.ndarray:
    out = np.empty_like(blocks)
    for code in range(8):
        sel = np.flatnonzero(codes == code)
        if sel.size:
            out[sel] = transform_block_geometry(blocks[sel], code, inverse)
    return out


def _apply_shuffle(blocks: np.ndarray, codes: np.ndarray, inverse: bool) -> np.ndarray:
    out = np.empty_like(blocks)
    for code, order in enumerate(CHANNEL_ORDERS):
        sel = np.flatnonzero(codes == code)
        if sel.size:
            idx = np.argsort(order) if inverse else list(order)
            out[sel] = blocks[sel][..., idx]
    return out


def encrypt(img: RasterImage, key: EtcKey, bx: int = 16, by: int = 16,
            *, steps=ALL_STEPS) -> RasterImage:
    """Encrypt an image whose dimensions are multiples of the block size.

    ``steps`` selects which of the four operations run; it exists for tests
    and analysis, and decryption must be given the same set.
    """
    grid = _grid_for(img, bx, by)
    sched = KeySchedule.expand(key, grid.n)
    blocks = _to_blocks(img.pixels, grid)
    if PERMUTE in steps:
        blocks = blocks[sched.permutation]
    if GEOMETRY in steps:
        blocks = _apply_geometry(blocks, sched.geometry, inverse=False)
    if NEGPOS in steps:
        blocks = blocks.copy()
        blocks[sched.negpos == 1] ^= 0xFF
    if SHUFFLE in steps:
        blocks = _apply_shuffle(blocks, sched.shuffle, inverse=False)
    return RasterImage(_from_blocks(blocks, grid))


def decrypt(img: RasterImage, key: EtcKey, bx: int = 16, by: int = 16,
            *, steps=ALL_STEPS) -> RasterImage:
    grid = _grid_for(img, bx, by)
    sched = KeySchedule.expand(key, grid.n)
    blocks = _to_blocks(img.pixels, grid)
    if SHUFFLE in steps:
        blocks = _apply_shuffle(blocks, sched.shuffle, inverse=True)
    if NEGPOS in steps:
        blocks = blocks.copy()
        blocks[sched.negpos == 1] ^= 0xFF
    if GEOMETRY in steps:
        blocks = _apply_geometry(blocks, sched.geometry, inverse=True)
    if PERMUTE in steps:
        restored = np.empty_like(blocks)
        restored[sched.permutation] = blocks
        blocks = restored
    return RasterImage(_from_blocks(blocks, grid))


def read_key_file(path) -> EtcKey:
    with open(path, "r", encoding="ascii") as f:
        return EtcKey.from_text(f.read())


def write_key_file(path, key: EtcKey) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(key.to_text())
