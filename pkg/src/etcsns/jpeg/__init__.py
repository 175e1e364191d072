"""Self-contained baseline JPEG codec with DCT-domain requantization."""

from .codec import (CodedImage, UnsupportedFormatError, decode, encode, forward_transform,
                    parse, reconstruct, requantize, requantize_coded, serialize)
from .color import (BILINEAR, DCT_SCALED, SubsamplingMode, rgb_to_ycbcr, subsample_chroma,
                    upsample_chroma, ycbcr_to_rgb)
from .dct import fdct8x8, idct8x8, idct8x8_to_16x16
from .entropy import DecodeError, HuffmanTable
from .markers import iter_segments, strip_metadata
from .quant import CHROMA, LUMA, QuantTable, estimate_quality, quality_table, quality_to_table
from .tables import CHROMA_BASE, LUMA_BASE, ZIGZAG

S444 = SubsamplingMode.S444
S420 = SubsamplingMode.S420

__all__ = [
    "BILINEAR", "CHROMA", "CHROMA_BASE", "CodedImage", "DecodeError", "HuffmanTable", "LUMA",
    "DCT_SCALED", "LUMA_BASE", "QuantTable", "S420", "S444", "SubsamplingMode",
    "UnsupportedFormatError", "ZIGZAG", "decode", "encode", "estimate_quality",
    "fdct8x8", "forward_transform", "idct8x8", "idct8x8_to_16x16", "iter_segments", "parse",
    "quality_table", "quality_to_table", "reconstruct", "requantize",
    "requantize_coded", "rgb_to_ycbcr", "serialize", "strip_metadata",
    "subsample_chroma", "upsample_chroma", "ycbcr_to_rgb",
]
