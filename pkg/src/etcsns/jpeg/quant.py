"""Quantization tables and IJG quality scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tables import CHROMA_BASE, LUMA_BASE, ZIGZAG

LUMA = "luma"
CHROMA = "chroma"


@dataclass(frozen=True)
class QuantTable:
    """64 quantizer steps in zigzag order, each in ``[1, 255]``."""

    values: tuple
    kind: str = LUMA

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if len(vals) != 64:
            raise ValueError(f"a quantization table has 64 entries, got {len(vals)}")
        if min(vals) < 1 or max(vals) > 255:
            raise ValueError("quantization table entries must lie in [1, 255]")
        if self.kind not in (LUMA, CHROMA):
            raise ValueError(f"unknown table kind {self.kind!r}")
        object.__setattr__(self, "values", vals)

    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int64)

    def natural(self) -> np.ndarray:
        """Entries as an 8x8 array in row-major frequency order."""
        out = np.empty(64, dtype=np.int64)
        out[ZIGZAG] = self.values
        return out.reshape(8, 8)


def base_table(kind: str) -> tuple:
    return LUMA_BASE if kind == LUMA else CHROMA_BASE


def _scale(qf: int) -> int:
    return 5000 // qf if qf < 50 else 200 - 2 * qf


def quality_to_table(base, qf: int, kind: str = LUMA) -> QuantTable:
    """Scale a base table by quality factor ``qf`` using the IJG rule."""
    if isinstance(qf, bool) or int(qf) != qf or not 1 <= qf <= 100:
        raise ValueError(f"quality factor must be an integer in 1..100, got {qf!r}")
    if isinstance(base, str):
        kind, base = base, base_table(base)
    scale = _scale(int(qf))
    return QuantTable(tuple(min(255, max(1, (b * scale + 50) // 100)) for b in base), kind)


def quality_table(qf: int, kind: str = LUMA) -> QuantTable:
    """Annex K table for ``kind`` at quality ``qf``."""
    return quality_to_table(base_table(kind), qf, kind)


def _candidates(kind: str) -> np.ndarray:
    cache = _CANDIDATES.get(kind)
    if cache is None:
        cache = np.array([quality_table(q, kind).values for q in range(1, 101)])
        _CANDIDATES[kind] = cache
    return cache


_CANDIDATES: dict = {}


def estimate_quality(table: QuantTable) -> int:
    """Closest IJG quality factor by L1 distance; ties go to the larger factor."""
    dist = np.abs(_candidates(table.kind) - table.array()).sum(axis=1)
    best = np.flatnonzero(dist == dist.min())
    return int(best[-1]) + 1
