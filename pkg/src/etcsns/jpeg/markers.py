"""JPEG marker segment walking and metadata stripping."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Optional

from ..image import FormatError

SOI = 0xD8
EOI = 0xD9
SOS = 0xDA
DQT = 0xDB
DHT = 0xC4
DRI = 0xDD
APP0 = 0xE0
COM = 0xFE
SOF0 = 0xC0
SOF1 = 0xC1
# Every SOFn except DHT (C4), JPG (C8) and DAC (CC).
SOF_MARKERS = frozenset({0xC0, 0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7,
                         0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF})

_STANDALONE = frozenset({SOI, EOI, 0x01, *range(0xD0, 0xD8)})

JFIF_APP0 = (b"\xff\xe0" + struct.pack(">H", 16) + b"JFIF\x00"
             + bytes([1, 1, 0]) + struct.pack(">HH", 1, 1) + bytes([0, 0]))


@dataclass(frozen=True)
class Segment:
    """One piece of a JPEG stream.

    ``marker`` is None for entropy-coded data following an SOS header.
    ``raw`` holds the exact bytes, including marker and length.
    """

    marker: Optional[int]
    offset: int
    raw: bytes

    @property
    def payload(self) -> bytes:
        if self.marker is None:
            return self.raw
        if self.marker in _STANDALONE:
            return b""
        return self.raw[4:]

    @property
    def name(self) -> str:
        if self.marker is None:
            return "ECS"
        return marker_name(self.marker)


def marker_name(marker: int) -> str:
    if 0xE0 <= marker <= 0xEF:
        return f"APP{marker - 0xE0}"
    if 0xD0 <= marker <= 0xD7:
        return f"RST{marker - 0xD0}"
    if marker in SOF_MARKERS:
        return f"SOF{marker - 0xC0}"
    return {SOI: "SOI", EOI: "EOI", SOS: "SOS", DQT: "DQT", DHT: "DHT",
            DRI: "DRI", COM: "COM", 0xDC: "DNL"}.get(marker, f"0x{marker:02X}")


def _scan_end(data: bytes, pos: int) -> int:
    """Offset of the first marker that terminates entropy-coded data."""
    n = len(data)
    while True:
        i = data.find(b"\xff", pos)
        if i < 0 or i + 1 >= n:
            raise FormatError(f"entropy-coded data starting at byte offset {pos} "
                              "is not terminated by a marker")
        nxt = data[i + 1]
        if nxt == 0x00 or 0xD0 <= nxt <= 0xD7:
            pos = i + 2
        else:
            return i


def iter_segments(data: bytes) -> Iterator[Segment]:
    """Walk the marker structure up to and including EOI."""
    data = bytes(data)
    if data[:2] != b"\xff\xd8":
        raise FormatError("missing SOI marker at byte offset 0")
    yield Segment(SOI, 0, data[:2])
    pos = 2
    n = len(data)
    while True:
        if pos >= n:
            raise FormatError(f"missing EOI marker: stream ends at byte offset {pos}")
        if data[pos] != 0xFF:
            raise FormatError(f"expected a marker at byte offset {pos}, "
                              f"found 0x{data[pos]:02X}")
        start = pos
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            raise FormatError(f"truncated marker at byte offset {start}")
        marker = data[pos]
        pos += 1
        if marker == 0x00:
            raise FormatError(f"invalid marker 0xFF00 at byte offset {start}")
        if marker in _STANDALONE:
            yield Segment(marker, start, b"\xff" + bytes([marker]))
            if marker == EOI:
                return
            continue
        if pos + 2 > n:
            raise FormatError(f"truncated {marker_name(marker)} length at byte offset {pos}")
        (length,) = struct.unpack_from(">H", data, pos)
        if length < 2 or pos + length > n:
            raise FormatError(f"bad {marker_name(marker)} segment length {length} "
                              f"at byte offset {pos}")
        end = pos + length
        yield Segment(marker, start, b"\xff" + bytes([marker]) + data[pos:end])
        pos = end
        if marker == SOS:
            stop = _scan_end(data, pos)
            yield Segment(None, pos, data[pos:stop])
            pos = stop


def is_metadata(marker: Optional[int]) -> bool:
    """APP1..APP15 and COM segments."""
    return marker is not None and (0xE1 <= marker <= 0xEF or marker == COM)


def _is_jfif(seg: Segment) -> bool:
    return seg.marker == APP0 and seg.payload[:5] == b"JFIF\x00"


def strip_metadata(data: bytes) -> bytes:
    """Drop APP1..APP15 and COM segments; ensure a JFIF APP0 is present.

    Entropy-coded data and all other segments are copied byte for byte.
    Anything after EOI is discarded.
    """
    segments = list(iter_segments(data))
    has_jfif = any(_is_jfif(s) for s in segments)
    out = [segments[0].raw]
    if not has_jfif:
        out.append(JFIF_APP0)
    out.extend(s.raw for s in segments[1:] if not is_metadata(s.marker))
    return b"".join(out)


def insert_segment(data: bytes, marker: int, payload: bytes) -> bytes:
    """Insert a marker segment directly after SOI (and any leading APP0)."""
    segments = list(iter_segments(data))
    seg = b"\xff" + bytes([marker]) + struct.pack(">H", len(payload) + 2) + payload
    i = 1
    while i < len(segments) and segments[i].marker == APP0:
        i += 1
    raws = [s.raw for s in segments]
    return b"".join(raws[:i] + [seg] + raws[i:])
