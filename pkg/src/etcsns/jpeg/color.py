"""Color conversion and chroma resampling (BT.601 full range, JFIF)."""

from __future__ import annotations

import enum

import numpy as np

from ..image import RasterImage


class SubsamplingMode(enum.Enum):
    """Chroma sampling of a JPEG: full resolution or halved both ways."""

    S444 = "4:4:4"
    S420 = "4:2:0"

    @property
    def factor(self) -> int:
        """Luma sampling factor per direction (chroma is always 1)."""
        return 2 if self is SubsamplingMode.S420 else 1

    @property
    def short(self) -> str:
        return self.value.replace(":", "")[:3]

    @classmethod
    def parse(cls, text) -> "SubsamplingMode":
        if isinstance(text, cls):
            return text
        t = str(text).strip().replace(":", "").upper().lstrip("S")
        for m in cls:
            if m.short == t:
                return m
        raise ValueError(f"unknown subsampling mode {text!r} (expected 444 or 420)")


BILINEAR = "bilinear"
DCT_SCALED = "dct"
UPSAMPLING_KERNELS = (BILINEAR, DCT_SCALED)


def _round_clamp(x: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def rgb_to_ycbcr(img: RasterImage):
    """Return ``(Y, Cb, Cr)`` uint8 planes."""
    p = img.pixels.astype(np.float64)
    r, g, b = p[..., 0], p[..., 1], p[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return _round_clamp(y), _round_clamp(cb), _round_clamp(cr)


def ycbcr_to_rgb(planes) -> RasterImage:
    y, cb, cr = (np.asarray(p, dtype=np.float64) for p in planes)
    if not (y.shape == cb.shape == cr.shape):
        raise ValueError(f"plane size mismatch: {y.shape}, {cb.shape}, {cr.shape}")
    cb = cb - 128.0
    cr = cr - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return RasterImage(_round_clamp(np.stack([r, g, b], axis=-1)))


def subsample_chroma(plane: np.ndarray, mode) -> np.ndarray:
    """2x2 box average (round half up) for 4:2:0; identity for 4:4:4.

    Odd trailing rows/columns are edge-replicated first.
    """
    plane = np.asarray(plane)
    if SubsamplingMode.parse(mode) is SubsamplingMode.S444:
        return plane
    h, w = plane.shape
    p = np.pad(plane.astype(np.int32), ((0, h % 2), (0, w % 2)), mode="edge")
    s = p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2]
    return ((s + 2) // 4).astype(np.uint8)


def _upsample_axis(p: np.ndarray, axis: int) -> np.ndarray:
    # Output sample 2k sits at k - 1/4, 2k+1 at k + 1/4 in input coordinates.
    n = p.shape[axis]
    idx = np.arange(n)
    prev = np.take(p, np.maximum(idx - 1, 0), axis=axis)
    nxt = np.take(p, np.minimum(idx + 1, n - 1), axis=axis)
    even = 0.75 * p + 0.25 * prev
    odd = 0.75 * p + 0.25 * nxt
    out = np.stack([even, odd], axis=axis + 1)
    shape = list(p.shape)
    shape[axis] *= 2
    return out.reshape(shape)


def upsample_chroma(plane: np.ndarray, mode, width: int, height: int) -> np.ndarray:
    """Bilinear 2x upsampling with half-pixel phase, cropped to ``width`` x ``height``."""
    plane = np.asarray(plane)
    if SubsamplingMode.parse(mode) is SubsamplingMode.S444:
        return plane[:height, :width]
    p = plane.astype(np.float64)
    p = _upsample_axis(_upsample_axis(p, 0), 1)
    return _round_clamp(p[:height, :width])
