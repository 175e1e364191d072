"""Baseline sequential JPEG: encoder, decoder, parser and DCT-domain transcoder."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from ..image import FormatError, RasterImage
from . import markers
from .color import (BILINEAR, DCT_SCALED, UPSAMPLING_KERNELS, SubsamplingMode, rgb_to_ycbcr,
                    subsample_chroma, upsample_chroma, ycbcr_to_rgb)
from .dct import fdct8x8, idct8x8, idct8x8_to_16x16
from .entropy import (STD_AC_CHROMA, STD_AC_LUMA, STD_DC_CHROMA, STD_DC_LUMA,
                      HuffmanTable, decode_blocks, encode_blocks)
from .quant import CHROMA, LUMA, QuantTable, estimate_quality, quality_table
from .tables import UNZIGZAG, ZIGZAG


class UnsupportedFormatError(FormatError):
    """Valid JPEG that uses a feature outside baseline 4:4:4 / 4:2:0."""


@dataclass(frozen=True, eq=False)
class CodedImage:
    """A JPEG in the quantized DCT domain.

    ``coefficients[c]`` is an ``(block_rows, block_cols, 64)`` int32 array in
    zigzag order, padded to whole MCUs; DC values are absolute, not
    differences.  ``quant[c]`` is the table used by component ``c``
    (0 = Y, 1 = Cb, 2 = Cr).
    """

    width: int
    height: int
    mode: SubsamplingMode
    coefficients: tuple
    quant: tuple
    huffman: dict = field(default_factory=dict)
    restart_interval: int = 0

    @property
    def luma_table(self) -> QuantTable:
        return self.quant[0]

    @property
    def chroma_table(self) -> QuantTable:
        return self.quant[1]

    def estimated_quality(self) -> int:
        """IJG quality estimate from the luma table."""
        return estimate_quality(self.quant[0])

    def dequantized(self, c: int) -> np.ndarray:
        return self.coefficients[c].astype(np.int64) * self.quant[c].array()

    @property
    def mcu_size(self) -> int:
        return 8 * self.mode.factor

    @property
    def mcu_grid(self) -> tuple[int, int]:
        """``(mcu_rows, mcu_cols)``."""
        m = self.mcu_size
        return math.ceil(self.height / m), math.ceil(self.width / m)


def _plane_to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)


def _blocks_to_plane(blocks: np.ndarray) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _check_quality(qf):
    if isinstance(qf, bool) or int(qf) != qf or not 1 <= qf <= 100:
        raise ValueError(f"quality factor must be an integer in 1..100, got {qf!r}")


def forward_transform(img: RasterImage, qf: int, mode) -> CodedImage:
    """Color convert, subsample, DCT and quantize, stopping before entropy coding."""
    _check_quality(qf)
    mode = SubsamplingMode.parse(mode)
    m = 8 * mode.factor
    mr, mc = math.ceil(img.height / m), math.ceil(img.width / m)
    pad = ((0, mr * m - img.height), (0, mc * m - img.width))
    planes = [np.pad(p, pad, mode="edge") for p in rgb_to_ycbcr(img)]
    planes[1] = subsample_chroma(planes[1], mode)
    planes[2] = subsample_chroma(planes[2], mode)
    tables = (quality_table(qf, LUMA), quality_table(qf, CHROMA), quality_table(qf, CHROMA))
    coefs = []
    for plane, table in zip(planes, tables):
        spatial = _plane_to_blocks(plane.astype(np.float64) - 128.0)
        freq = fdct8x8(spatial) / table.natural()
        q = _round_half_away(freq).reshape(freq.shape[0], freq.shape[1], 64)[..., ZIGZAG]
        q[..., 1:] = np.clip(q[..., 1:], -1023, 1023)
        coefs.append(q.astype(np.int32))
    return CodedImage(img.width, img.height, mode, tuple(coefs), tables)


def _check_kernel(upsampling: str):
    if upsampling not in UPSAMPLING_KERNELS:
        raise ValueError(f"upsampling must be one of {UPSAMPLING_KERNELS}, got {upsampling!r}")


def reconstruct(coded: CodedImage, upsampling: str = BILINEAR) -> RasterImage:
    """Dequantize, inverse DCT, upsample and color convert.

    With ``upsampling="dct"`` each 4:2:0 chroma block is decoded directly to
    16x16 samples by a scaled inverse DCT, so no sample depends on a
    neighbouring block.  ``"bilinear"`` interpolates across block edges.
    """
    _check_kernel(upsampling)
    w, h, f = coded.width, coded.height, coded.mode.factor
    block_local = f == 2 and upsampling == DCT_SCALED
    planes = []
    for c in range(3):
        deq = coded.dequantized(c)[..., UNZIGZAG]
        deq = deq.reshape(deq.shape[0], deq.shape[1], 8, 8)
        if c and block_local:
            spatial = idct8x8_to_16x16(deq) + 128.0
            plane = spatial.transpose(0, 2, 1, 3).reshape(deq.shape[0] * 16, deq.shape[1] * 16)
        else:
            plane = _blocks_to_plane(idct8x8(deq) + 128.0)
        planes.append(np.clip(np.floor(plane + 0.5), 0, 255).astype(np.uint8))
    y = planes[0][:h, :w]
    if block_local:
        cb, cr = planes[1][:h, :w], planes[2][:h, :w]
    else:
        cw, ch = math.ceil(w / f), math.ceil(h / f)
        cb = upsample_chroma(planes[1][:ch, :cw], coded.mode, w, h)
        cr = upsample_chroma(planes[2][:ch, :cw], coded.mode, w, h)
    return ycbcr_to_rgb((y, cb, cr))


# -- serialization ------------------------------------------------------------

def _segment(marker: int, payload: bytes) -> bytes:
    return b"\xff" + bytes([marker]) + struct.pack(">H", len(payload) + 2) + payload


def _dht_payload(cls: int, ident: int, table: HuffmanTable) -> bytes:
    return bytes([(cls << 4) | ident]) + bytes(table.bits) + bytes(table.values)


def _interleave(coded: CodedImage):
    """Blocks of all components in MCU scan order, with their component index."""
    mr, mc = coded.mcu_grid
    f = coded.mode.factor
    y, cb, cr = coded.coefficients
    y = y.reshape(mr, f, mc, f, 64).transpose(0, 2, 1, 3, 4).reshape(mr * mc, f * f, 64)
    mcus = np.concatenate([y, cb.reshape(mr * mc, 1, 64), cr.reshape(mr * mc, 1, 64)], axis=1)
    comp = np.tile(np.array([0] * (f * f) + [1, 2]), mr * mc)
    return mcus.reshape(-1, 64), comp


def serialize(coded: CodedImage) -> bytes:
    """Entropy-code a CodedImage as a JFIF file with the standard Huffman tables."""
    if not (1 <= coded.width <= 65535 and 1 <= coded.height <= 65535):
        raise ValueError(f"dimensions {coded.width}x{coded.height} out of JPEG range")
    # Cb and Cr share table 1 unless they differ.
    q_ids = [0, 1, 1 if coded.quant[2] == coded.quant[1] else 2]
    dqt = b""
    for tid in sorted(set(q_ids)):
        dqt += bytes([tid]) + bytes(coded.quant[q_ids.index(tid)].values)
    f = coded.mode.factor
    sof = struct.pack(">BHHB", 8, coded.height, coded.width, 3)
    for c in range(3):
        hv = (f << 4 | f) if c == 0 else 0x11
        sof += bytes([c + 1, hv, q_ids[c]])
    dht = (_dht_payload(0, 0, STD_DC_LUMA) + _dht_payload(1, 0, STD_AC_LUMA)
           + _dht_payload(0, 1, STD_DC_CHROMA) + _dht_payload(1, 1, STD_AC_CHROMA))
    sos = bytes([3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0])
    blocks, comp = _interleave(coded)
    ecs = encode_blocks(blocks, comp,
                        (STD_DC_LUMA, STD_DC_CHROMA, STD_DC_CHROMA),
                        (STD_AC_LUMA, STD_AC_CHROMA, STD_AC_CHROMA))
    return b"".join([
        b"\xff\xd8", markers.JFIF_APP0,
        _segment(markers.DQT, dqt), _segment(markers.SOF0, sof),
        _segment(markers.DHT, dht), _segment(markers.SOS, sos),
        ecs, b"\xff\xd9",
    ])


def encode(img: RasterImage, qf: int, mode="444") -> bytes:
    """Baseline JFIF encoding at IJG quality ``qf``."""
    return serialize(forward_transform(img, qf, mode))


# -- parsing ------------------------------------------------------------------

@dataclass
class _Frame:
    width: int
    height: int
    ids: list
    sampling: list
    tq: list


def _parse_dqt(payload: bytes, qtables: dict, offset: int):
    pos = 0
    while pos < len(payload):
        pq, tq = payload[pos] >> 4, payload[pos] & 15
        size = 128 if pq else 64
        body = payload[pos + 1:pos + 1 + size]
        if len(body) != size or tq > 3 or pq > 1:
            raise FormatError(f"malformed DQT segment at byte offset {offset}")
        vals = struct.unpack(">64H", body) if pq else tuple(body)
        if min(vals) < 1 or max(vals) > 255:
            raise UnsupportedFormatError(
                f"quantization table {tq} has entries outside 1..255 (offset {offset})")
        qtables[tq] = vals
        pos += 1 + size


def _parse_dht(payload: bytes, htables: dict, offset: int):
    pos = 0
    while pos < len(payload):
        if pos + 17 > len(payload):
            raise FormatError(f"malformed DHT segment at byte offset {offset}")
        tc, th = payload[pos] >> 4, payload[pos] & 15
        bits = tuple(payload[pos + 1:pos + 17])
        count = sum(bits)
        vals = tuple(payload[pos + 17:pos + 17 + count])
        if tc > 1 or th > 3 or len(vals) != count:
            raise FormatError(f"malformed DHT segment at byte offset {offset}")
        try:
            htables[(tc, th)] = HuffmanTable(bits, vals)
        except ValueError as exc:
            raise FormatError(f"invalid Huffman table at byte offset {offset}: {exc}") from None
        pos += 17 + count


def _parse_sof(seg) -> _Frame:
    p = seg.payload
    if seg.marker not in (markers.SOF0, markers.SOF1):
        raise UnsupportedFormatError(
            f"{markers.marker_name(seg.marker)} at byte offset {seg.offset} is not "
            "baseline sequential Huffman")
    if len(p) < 6:
        raise FormatError(f"truncated SOF at byte offset {seg.offset}")
    precision, height, width, nf = struct.unpack_from(">BHHB", p)
    if precision != 8:
        raise UnsupportedFormatError(f"{precision}-bit samples are not supported")
    if nf != 3:
        raise UnsupportedFormatError(f"{nf}-component images are not supported")
    if len(p) < 6 + 3 * nf:
        raise FormatError(f"truncated SOF at byte offset {seg.offset}")
    if width == 0 or height == 0:
        raise UnsupportedFormatError("DNL-defined height is not supported")
    ids, sampling, tq = [], [], []
    for i in range(nf):
        cid, hv, t = p[6 + 3 * i:9 + 3 * i]
        ids.append(cid)
        sampling.append((hv >> 4, hv & 15))
        tq.append(t)
    return _Frame(width, height, ids, sampling, tq)


def _mode_of(frame: _Frame) -> SubsamplingMode:
    if frame.sampling == [(1, 1)] * 3:
        return SubsamplingMode.S444
    if frame.sampling == [(2, 2), (1, 1), (1, 1)]:
        return SubsamplingMode.S420
    raise UnsupportedFormatError(f"sampling factors {frame.sampling} are not 4:4:4 or 4:2:0")


def parse(data: bytes) -> CodedImage:
    """Entropy-decode a baseline JPEG into its quantized coefficients."""
    qtables, htables = {}, {}
    frame = None
    mode = None
    coefs = None
    restart = 0
    used_huffman = {}
    pending_scan = None
    seen_scan = False
    for seg in markers.iter_segments(data):
        if seg.marker is None:
            _decode_scan(seg.raw, pending_scan, frame, mode, coefs, htables, restart, used_huffman)
            seen_scan = True
            continue
        if seg.marker == markers.DQT:
            _parse_dqt(seg.payload, qtables, seg.offset)
        elif seg.marker == markers.DHT:
            _parse_dht(seg.payload, htables, seg.offset)
        elif seg.marker == markers.DRI:
            if len(seg.payload) != 2:
                raise FormatError(f"malformed DRI at byte offset {seg.offset}")
            (restart,) = struct.unpack(">H", seg.payload)
        elif seg.marker in markers.SOF_MARKERS:
            if frame is not None:
                raise FormatError(f"second frame header at byte offset {seg.offset}")
            frame = _parse_sof(seg)
            mode = _mode_of(frame)
            mr = math.ceil(frame.height / (8 * mode.factor))
            mc = math.ceil(frame.width / (8 * mode.factor))
            f = mode.factor
            coefs = [np.zeros((mr * f, mc * f, 64), np.int32),
                     np.zeros((mr, mc, 64), np.int32), np.zeros((mr, mc, 64), np.int32)]
            quant_at_frame = qtables
        elif seg.marker == markers.SOS:
            if frame is None:
                raise FormatError(f"SOS before frame header at byte offset {seg.offset}")
            pending_scan = _parse_sos(seg, frame)
    if frame is None or not seen_scan:
        raise FormatError("stream has no frame or no scan")
    quant = []
    for c in range(3):
        vals = quant_at_frame.get(frame.tq[c])
        if vals is None:
            raise FormatError(f"component {c} references undefined quantization table "
                              f"{frame.tq[c]}")
        quant.append(QuantTable(vals, LUMA if c == 0 else CHROMA))
    return CodedImage(frame.width, frame.height, mode, tuple(coefs), tuple(quant),
                      used_huffman, restart)


def _parse_sos(seg, frame: _Frame):
    p = seg.payload
    ns = p[0] if p else 0
    if ns < 1 or len(p) != 4 + 2 * ns:
        raise FormatError(f"malformed SOS at byte offset {seg.offset}")
    comps = []
    for i in range(ns):
        cid, t = p[1 + 2 * i], p[2 + 2 * i]
        if cid not in frame.ids:
            raise FormatError(f"scan references unknown component {cid} "
                              f"at byte offset {seg.offset}")
        comps.append((frame.ids.index(cid), t >> 4, t & 15))
    ss, se, a = p[1 + 2 * ns:4 + 2 * ns]
    if (ss, se, a) != (0, 63, 0):
        raise UnsupportedFormatError(f"scan at byte offset {seg.offset} is not sequential")
    return comps


def _decode_scan(ecs, comps, frame, mode, coefs, htables, restart, used):
    try:
        dc = [htables[(0, td)] for _, td, _ in comps]
        ac = [htables[(1, ta)] for _, _, ta in comps]
    except KeyError as exc:
        raise FormatError(f"scan uses undefined Huffman table {exc.args[0]}") from None
    for (c, td, ta), d, a in zip(comps, dc, ac):
        used[c] = (d, a)
    f = mode.factor
    if len(comps) == 1:
        c = comps[0][0]
        sub = f if c == 0 else 1
        bw = math.ceil(math.ceil(frame.width * sub / f) / 8)
        bh = math.ceil(math.ceil(frame.height * sub / f) / 8)
        out = decode_blocks(ecs, bh * bw, [0], dc, ac, restart)
        coefs[c][:bh, :bw] = out.reshape(bh, bw, 64)
        return
    slots = []
    for slot, (c, _, _) in enumerate(comps):
        slots += [slot] * (f * f if c == 0 else 1)
    mr, mc = coefs[1].shape[:2]
    out = decode_blocks(ecs, mr * mc, slots, dc, ac, restart)
    out = out.reshape(mr, mc, len(slots), 64)
    j = 0
    for c, _, _ in comps:
        if c == 0:
            y = out[:, :, j:j + f * f].reshape(mr, mc, f, f, 64)
            coefs[0][:] = y.transpose(0, 2, 1, 3, 4).reshape(mr * f, mc * f, 64)
            j += f * f
        else:
            coefs[c][:] = out[:, :, j]
            j += 1


def decode(data: bytes, upsampling: str = BILINEAR) -> RasterImage:
    """Fully decode a baseline JPEG to RGB; see :func:`reconstruct` for ``upsampling``."""
    _check_kernel(upsampling)
    return reconstruct(parse(data), upsampling)


# -- DCT-domain transcoding ---------------------------------------------------

def requantize_coded(coded: CodedImage, qf_new: int) -> CodedImage:
    """Requantize with the Annex K tables at ``qf_new``, never leaving the DCT domain.

    Each level ``c`` with old step ``q_old`` becomes the rational
    ``c * q_old / q_new`` rounded half away from zero.
    """
    _check_quality(qf_new)
    new_coefs, new_quant = [], []
    for c in range(3):
        table = quality_table(qf_new, LUMA if c == 0 else CHROMA)
        num = coded.dequantized(c)
        den = table.array()
        mag = (2 * np.abs(num) + den) // (2 * den)
        out = np.sign(num) * mag
        out[..., 1:] = np.clip(out[..., 1:], -1023, 1023)
        new_coefs.append(out.astype(np.int32))
        new_quant.append(table)
    return replace(coded, coefficients=tuple(new_coefs), quant=tuple(new_quant),
                   huffman={}, restart_interval=0)


def requantize(coded: CodedImage, qf_new: int) -> bytes:
    return serialize(requantize_coded(coded, qf_new))
