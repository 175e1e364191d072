"""Orthonormal 8x8 DCT-II / DCT-III in double precision."""

import numpy as np


def _dct_matrix() -> np.ndarray:
    k = np.arange(8)[:, None]
    n = np.arange(8)[None, :]
    c = np.cos((2 * n + 1) * k * np.pi / 16) * np.sqrt(2 / 8)
    c[0] /= np.sqrt(2)
    return c


DCT_MATRIX = _dct_matrix()


def _dct_matrix16() -> np.ndarray:
    k = np.arange(16)[:, None]
    n = np.arange(16)[None, :]
    c = np.cos((2 * n + 1) * k * np.pi / 32) * np.sqrt(2 / 16)
    c[0] /= np.sqrt(2)
    return c


# 8 coefficients -> 16 samples: low half of the 16-point inverse DCT, scaled by
# sqrt(2) per axis so a flat block keeps its level.
_UP16 = _dct_matrix16()[:8].T * np.sqrt(2)


def fdct8x8(blocks) -> np.ndarray:
    """Forward DCT over the last two axes of ``(..., 8, 8)`` level-shifted samples."""
    b = np.asarray(blocks, dtype=np.float64)
    return DCT_MATRIX @ b @ DCT_MATRIX.T


def idct8x8(coefs) -> np.ndarray:
    c = np.asarray(coefs, dtype=np.float64)
    return DCT_MATRIX.T @ c @ DCT_MATRIX


def idct8x8_to_16x16(coefs) -> np.ndarray:
    """Inverse DCT of ``(..., 8, 8)`` coefficients onto a 16x16 sample grid."""
    c = np.asarray(coefs, dtype=np.float64)
    return _UP16 @ c @ _UP16.T
