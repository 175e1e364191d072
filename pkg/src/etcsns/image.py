"""RGB rasters, PPM I/O, block geometry and quality metrics."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class FormatError(ValueError):
    """Raised when an input byte stream is malformed."""


class RasterImage:
    """An immutable 8-bit RGB image.

    Pixels live in a read-only ``(height, width, 3)`` uint8 array.
    """

    __slots__ = ("_pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected an (H, W, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating):
                if arr.min() < 0 or arr.max() > 255:
                    raise ValueError("samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True, order="C")
        arr.flags.writeable = False
        self._pixels = arr

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """``(width, height)``."""
        return self.width, self.height

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return np.array_equal(self._pixels, other._pixels)

    __hash__ = None

    def __repr__(self):
        return f"RasterImage({self.width}x{self.height})"

    @classmethod
    def filled(cls, width: int, height: int, value=0) -> "RasterImage":
        return cls(np.full((height, width, 3), value, dtype=np.uint8))


@dataclass(frozen=True)
class BlockGrid:
    """Tiling of an image into non-overlapping ``bx`` x ``by`` blocks."""

    bx: int
    by: int
    cols: int
    rows: int

    @property
    def n(self) -> int:
        return self.cols * self.rows

    @classmethod
    def for_size(cls, width: int, height: int, bx: int, by: int) -> "BlockGrid":
        _check_positive(width=width, height=height, bx=bx, by=by)
        return cls(bx, by, width // bx, height // by)


def _check_positive(**dims):
    for name, v in dims.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")


def block_count(width: int, height: int, bx: int, by: int) -> int:
    """Number of whole blocks: ``floor(X/bx) * floor(Y/by)``."""
    return BlockGrid.for_size(width, height, bx, by).n


def crop_to_block_multiple(img: RasterImage, bx: int, by: int) -> RasterImage:
    """Crop from the top-left so both dimensions are block multiples."""
    _check_positive(bx=bx, by=by)
    if img.width < bx or img.height < by:
        raise ValueError(
            f"{img.width}x{img.height} image is smaller than one {bx}x{by} block")
    w = img.width // bx * bx
    h = img.height // by * by
    if (w, h) == img.shape:
        return img
    return RasterImage(img.pixels[:h, :w])


# -- PPM ---------------------------------------------------------------------

_WS = b" \t\r\n\v\f"


def _ppm_tokens(data: bytes, count: int):
    """Yield ``count`` header tokens as ``(value, end_offset)``; skips comments."""
    pos = 2
    for _ in range(count):
        start = pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            elif c in _WS:
                pos += 1
            else:
                break
        if pos == start:
            raise FormatError(f"expected whitespace at byte offset {pos}")
        m = re.compile(rb"\d+").match(data, pos)
        if m is None:
            raise FormatError(f"expected a decimal number at byte offset {pos}")
        pos = m.end()
        yield int(m.group()), pos


def load_ppm(data: bytes) -> RasterImage:
    """Parse a binary ``P6`` PPM with maxval 255."""
    data = bytes(data)
    if data[:2] != b"P6":
        raise FormatError("bad magic at byte offset 0: expected b'P6'")
    (w, _), (h, _), (maxval, pos) = _ppm_tokens(data, 3)
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} ending at byte offset {pos}")
    if pos >= len(data) or data[pos:pos + 1] not in _WS:
        raise FormatError(f"expected a single whitespace byte at byte offset {pos}")
    pos += 1
    need = w * h * 3
    if w < 1 or h < 1:
        raise FormatError(f"invalid dimensions {w}x{h}")
    if len(data) - pos < need:
        raise FormatError(
            f"truncated pixel payload at byte offset {len(data)}: "
            f"expected {need} bytes from offset {pos}")
    arr = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return RasterImage(arr.reshape(h, w, 3))


def save_ppm(img: RasterImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def read_ppm(path) -> RasterImage:
    with open(path, "rb") as f:
        return load_ppm(f.read())


def write_ppm(path, img: RasterImage) -> None:
    with open(path, "wb") as f:
        f.write(save_ppm(img))


# -- metrics and resampling ---------------------------------------------------

def psnr(a: RasterImage, b: RasterImage) -> float:
    """PSNR in dB over all samples of all channels; ``inf`` for identical images."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def fit_within(width: int, height: int, max_w: int, max_h: int) -> tuple[int, int]:
    """Aspect-preserving target size so that both sides fit the limits."""
    if width <= max_w and height <= max_h:
        return width, height
    scale = min(max_w / width, max_h / height)
    w = min(max_w, max(1, math.floor(width * scale + 0.5)))
    h = min(max_h, max(1, math.floor(height * scale + 0.5)))
    return w, h


def _bilinear_taps(n_in: int, n_out: int):
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    x = np.clip(x, 0, n_in - 1)
    i0 = np.floor(x).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, x - i0


def resize_bilinear(img: RasterImage, max_w: int, max_h: int) -> RasterImage:
    """Downscale to fit within ``max_w`` x ``max_h``; identity when it already fits."""
    _check_positive(max_w=max_w, max_h=max_h)
    w, h = fit_within(img.width, img.height, max_w, max_h)
    if (w, h) == img.shape:
        return img
    src = img.pixels.astype(np.float64)
    y0, y1, fy = _bilinear_taps(img.height, h)
    x0, x1, fx = _bilinear_taps(img.width, w)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return RasterImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))
