"""Baseline Huffman entropy coding of quantized DCT blocks.

Encoding is vectorized with numpy: every Huffman symbol of the scan becomes
one ``(value, bit_length)`` item, items are ordered by a sort key and then
packed.  Decoding is inherently sequential and runs in a numba kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from . import tables

_CHUNK = 1 << 18


class DecodeError(ValueError):
    """Corrupt entropy-coded data."""

    def __init__(self, message, mcu=None):
        super().__init__(message if mcu is None else f"{message} (MCU {mcu})")
        self.mcu = mcu


@dataclass(frozen=True)
class HuffmanTable:
    """Canonical Huffman table as stored in a DHT segment."""

    bits: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.bits) != 16 or sum(self.bits) != len(self.values):
            raise ValueError("inconsistent Huffman table")
        code = 0
        for n in self.bits:
            code += n
            if code > 1 << 16:
                raise ValueError("Huffman code lengths overflow")
            code <<= 1

    def encoder_arrays(self):
        """``(code, length)`` arrays indexed by symbol; length 0 means absent."""
        codes = np.zeros(256, dtype=np.int64)
        lengths = np.zeros(256, dtype=np.int64)
        code, k = 0, 0
        for length, count in enumerate(self.bits, 1):
            for _ in range(count):
                codes[self.values[k]] = code
                lengths[self.values[k]] = length
                code += 1
                k += 1
            code <<= 1
        return codes, lengths

    def decoder_arrays(self):
        """``(maxcode, valptr, mincode, huffval)`` per T.81 figure F.15."""
        maxcode = np.full(18, -1, dtype=np.int64)
        valptr = np.zeros(17, dtype=np.int64)
        mincode = np.zeros(17, dtype=np.int64)
        huffval = np.zeros(256, dtype=np.int64)
        huffval[:len(self.values)] = self.values
        code, k = 0, 0
        for length, count in enumerate(self.bits, 1):
            if count:
                valptr[length] = k
                mincode[length] = code
                code += count
                k += count
                maxcode[length] = code - 1
            code <<= 1
        maxcode[17] = 1 << 30
        return maxcode, valptr, mincode, huffval


STD_DC_LUMA = HuffmanTable(*tables.DC_LUMA)
STD_DC_CHROMA = HuffmanTable(*tables.DC_CHROMA)
STD_AC_LUMA = HuffmanTable(*tables.AC_LUMA)
STD_AC_CHROMA = HuffmanTable(*tables.AC_CHROMA)


def _bit_size(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    size = np.zeros(a.shape, dtype=np.int64)
    nz = a > 0
    size[nz] = np.floor(np.log2(a[nz])).astype(np.int64) + 1
    return size


def _amplitude(x: np.ndarray, size: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, x, x + (np.int64(1) << size) - 1)


def _pack(values: np.ndarray, lengths: np.ndarray) -> bytes:
    """Concatenate MSB-first codes, pad with 1-bits and byte-stuff 0xFF."""
    parts = []
    for lo in range(0, len(values), _CHUNK):
        v = values[lo:lo + _CHUNK]
        n = lengths[lo:lo + _CHUNK]
        total = int(n.sum())
        starts = np.cumsum(n) - n
        offset = np.arange(total, dtype=np.int64) - np.repeat(starts, n)
        shift = np.repeat(n, n) - 1 - offset
        parts.append(((np.repeat(v, n) >> shift) & 1).astype(np.uint8))
    bits = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
    pad = (-len(bits)) % 8
    if pad:
        bits = np.concatenate([bits, np.ones(pad, dtype=np.uint8)])
    out = np.packbits(bits)
    ff = np.flatnonzero(out == 0xFF)
    if ff.size:
        out = np.insert(out, ff + 1, 0)
    return out.tobytes()


def encode_blocks(blocks: np.ndarray, comp: np.ndarray, dc_tables, ac_tables) -> bytes:
    """Entropy-code quantized blocks given in scan order.

    ``blocks`` is ``(N, 64)`` in zigzag order, ``comp[i]`` the component of
    block ``i``; ``dc_tables[c]`` / ``ac_tables[c]`` are that component's tables.
    """
    blocks = np.asarray(blocks, dtype=np.int64)
    comp = np.asarray(comp, dtype=np.intp)
    n_comp = len(dc_tables)
    dc_code = np.empty((n_comp, 256), np.int64)
    dc_len = np.empty((n_comp, 256), np.int64)
    ac_code = np.empty((n_comp, 256), np.int64)
    ac_len = np.empty((n_comp, 256), np.int64)
    for c in range(n_comp):
        dc_code[c], dc_len[c] = dc_tables[c].encoder_arrays()
        ac_code[c], ac_len[c] = ac_tables[c].encoder_arrays()

    # Sort key: block * STRIDE + zigzag position * 4 + slot (ZRLs 0..2, symbol 3).
    stride = 65 * 4
    n = len(blocks)
    block_idx = np.arange(n, dtype=np.int64)

    dc = blocks[:, 0]
    diff = np.empty(n, dtype=np.int64)
    for c in range(n_comp):
        m = comp == c
        diff[m] = np.diff(dc[m], prepend=0)
    size = _bit_size(diff)
    code_lens = [dc_len[comp, size]]
    lens = [code_lens[0] + size]
    vals = [(dc_code[comp, size] << size) | _amplitude(diff, size)]
    keys = [block_idx * stride]

    b, k = np.nonzero(blocks[:, 1:])
    k = k.astype(np.int64) + 1
    v = blocks[b, k]
    first = np.ones(len(b), dtype=bool)
    first[1:] = b[1:] != b[:-1]
    prev = np.empty_like(k)
    prev[0:1] = 0
    prev[1:] = k[:-1]
    prev[first] = 0
    run = k - prev - 1
    size = _bit_size(v)
    sym = ((run & 15) << 4) | size
    cb = comp[b]
    code_lens.append(ac_len[cb, sym])
    lens.append(code_lens[-1] + size)
    vals.append((ac_code[cb, sym] << size) | _amplitude(v, size))
    keys.append(b * stride + k * 4 + 3)

    nzrl = run >> 4
    if nzrl.any():
        zb = np.repeat(b, nzrl)
        zk = np.repeat(k, nzrl)
        zslot = np.arange(len(zb)) - np.repeat(np.cumsum(nzrl) - nzrl, nzrl)
        zc = comp[zb]
        code_lens.append(ac_len[zc, 0xF0])
        lens.append(code_lens[-1])
        vals.append(ac_code[zc, 0xF0])
        keys.append(zb * stride + zk * 4 + zslot)

    last = np.zeros(n, dtype=np.int64)
    last[b] = k
    eob = np.flatnonzero(last < 63)
    code_lens.append(ac_len[comp[eob], 0x00])
    lens.append(code_lens[-1])
    vals.append(ac_code[comp[eob], 0x00])
    keys.append(eob * stride + 64 * 4)

    lens = np.concatenate(lens)
    vals = np.concatenate(vals)
    if (np.concatenate(code_lens) == 0).any():
        raise ValueError("symbol missing from Huffman table")
    order = np.argsort(np.concatenate(keys), kind="stable")
    return _pack(vals[order], lens[order])


def split_restart_segments(ecs: bytes):
    """Remove byte stuffing and RST markers.

    Returns the unstuffed bytes and the start offset of each restart segment.
    """
    raw = np.frombuffer(ecs, dtype=np.uint8)
    if raw.size < 2:
        return raw.copy(), np.zeros(1, dtype=np.int64)
    ff = np.flatnonzero(raw[:-1] == 0xFF)
    nxt = raw[ff + 1]
    keep = np.ones(raw.size, dtype=bool)
    keep[ff[nxt == 0] + 1] = False
    rst = ff[(nxt >= 0xD0) & (nxt <= 0xD7)]
    keep[rst] = False
    keep[rst + 1] = False
    kept_before = np.cumsum(keep) - keep
    starts = np.concatenate([[0], kept_before[rst]]).astype(np.int64)
    return raw[keep], starts


@numba.njit(cache=True)
def _decode_kernel(data, seg_starts, restart, n_mcus, mcu_comp, dc_tab, ac_tab,
                   maxcode, valptr, mincode, huffval, out):
    # Returns (status, mcu): status 0 ok, 1 out of data, 2 bad code,
    # 3 coefficient index overflow, 4 missing restart segment.
    bpm = mcu_comp.shape[0]
    n_seg = seg_starts.shape[0]
    seg = 0
    pos = seg_starts[0]
    end = seg_starts[1] if n_seg > 1 else data.shape[0]
    acc = 0
    nbits = 0
    pred = np.zeros(4, np.int64)
    for mcu in range(n_mcus):
        if restart > 0 and mcu > 0 and mcu % restart == 0:
            seg += 1
            if seg >= n_seg:
                return 4, mcu
            pos = seg_starts[seg]
            end = seg_starts[seg + 1] if seg + 1 < n_seg else data.shape[0]
            nbits = 0
            pred[:] = 0
        for j in range(bpm):
            c = mcu_comp[j]
            row = mcu * bpm + j
            for phase in range(2):
                t = dc_tab[c] if phase == 0 else ac_tab[c]
                k = 0 if phase == 0 else 1
                while k < 64:
                    # Huffman symbol, one bit at a time
                    if nbits == 0:
                        if pos >= end:
                            return 1, mcu
                        acc = data[pos]
                        pos += 1
                        nbits = 8
                    nbits -= 1
                    code = (acc >> nbits) & 1
                    length = 1
                    while code > maxcode[t, length]:
                        if nbits == 0:
                            if pos >= end:
                                return 1, mcu
                            acc = data[pos]
                            pos += 1
                            nbits = 8
                        nbits -= 1
                        code = (code << 1) | ((acc >> nbits) & 1)
                        length += 1
                    if length > 16:
                        return 2, mcu
                    sym = huffval[t, valptr[t, length] + code - mincode[t, length]]
                    if phase == 0:
                        s = sym
                        r = 0
                    else:
                        r = sym >> 4
                        s = sym & 15
                        if s == 0:
                            if r == 15:
                                k += 16
                                continue
                            break
                        k += r
                        if k > 63:
                            return 3, mcu
                    v = 0
                    for _ in range(s):
                        if nbits == 0:
                            if pos >= end:
                                return 1, mcu
                            acc = data[pos]
                            pos += 1
                            nbits = 8
                        nbits -= 1
                        v = (v << 1) | ((acc >> nbits) & 1)
                    if s > 0 and v < (1 << (s - 1)):
                        v += 1 - (1 << s)
                    if phase == 0:
                        pred[c] += v
                        out[row, 0] = pred[c]
                        break
                    out[row, k] = v
                    k += 1
    return 0, n_mcus


_ERRORS = {1: "entropy-coded data ended early", 2: "invalid Huffman code",
           3: "AC coefficient index past 63", 4: "missing restart marker"}


def decode_blocks(ecs: bytes, n_mcus: int, mcu_comp, dc_tables, ac_tables,
                  restart_interval: int = 0) -> np.ndarray:
    """Decode ``n_mcus`` MCUs; returns ``(n_mcus * len(mcu_comp), 64)`` zigzag blocks.

    ``dc_tables[c]`` / ``ac_tables[c]`` give the tables of component slot ``c``.
    """
    data, starts = split_restart_segments(ecs)
    tabs = list(dc_tables) + list(ac_tables)
    arrays = [t.decoder_arrays() for t in tabs]
    maxcode = np.stack([a[0] for a in arrays])
    valptr = np.stack([a[1] for a in arrays])
    mincode = np.stack([a[2] for a in arrays])
    huffval = np.stack([a[3] for a in arrays])
    nc = len(dc_tables)
    dc_tab = np.arange(nc, dtype=np.int64)
    ac_tab = np.arange(nc, dtype=np.int64) + nc
    mcu_comp = np.asarray(mcu_comp, dtype=np.int64)
    out = np.zeros((n_mcus * len(mcu_comp), 64), dtype=np.int32)
    status, mcu = _decode_kernel(data.astype(np.int64), starts, int(restart_interval),
                                 int(n_mcus), mcu_comp, dc_tab, ac_tab,
                                 maxcode, valptr, mincode, huffval, out)
    if status:
        raise DecodeError(_ERRORS[status], mcu)
    return out
