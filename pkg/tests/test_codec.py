import io
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from conftest import noise_image, smooth_image
from etcsns.image import FormatError, RasterImage, psnr, read_ppm
from etcsns.jpeg import (BILINEAR, CHROMA, DCT_SCALED, LUMA, S420, S444, DecodeError,
                         UnsupportedFormatError, decode, encode, estimate_quality, iter_segments,
                         parse, quality_table, reconstruct, requantize, requantize_coded,
                         serialize)
from etcsns.jpeg.entropy import STD_AC_CHROMA, STD_AC_LUMA, STD_DC_CHROMA, STD_DC_LUMA, encode_blocks
from etcsns.jpeg.markers import COM, insert_segment

DATA = Path(__file__).parent / "data"


def pillow_decode(data: bytes) -> RasterImage:
    return RasterImage(np.asarray(Image.open(io.BytesIO(data)).convert("RGB")))


def pillow_encode(img: RasterImage, **kw) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels).save(buf, "JPEG", **kw)
    return buf.getvalue()


@pytest.mark.parametrize("qf, mode", [(85, "420"), (90, "444")])
def test_golden_bitstreams(qf, mode):
    src = read_ppm(DATA / "golden_src.ppm")
    golden = (DATA / f"golden_q{qf}_{mode}.jpg").read_bytes()
    assert encode(src, qf, mode) == golden
    assert psnr(decode(golden), pillow_decode(golden)) > 50


def test_framing_and_segment_order(astronaut):
    data = encode(astronaut, 75, S420)
    assert data[:2] == b"\xff\xd8" and data[-2:] == b"\xff\xd9"
    names = [s.name for s in iter_segments(data)]
    assert names == ["SOI", "APP0", "DQT", "SOF0", "DHT", "SOS", "ECS", "EOI"]
    assert b"\xff\xdd" not in data.split(b"\xff\xda")[0]


@given(st.integers(1, 40), st.integers(1, 40), st.sampled_from([S444, S420]),
       st.integers(1, 100), st.integers(0, 2**32 - 1))
def test_dimensions_and_mode_survive(w, h, mode, qf, seed):
    img = noise_image(np.random.default_rng(seed), w, h)
    data = encode(img, qf, mode)
    coded = parse(data)
    assert (coded.width, coded.height, coded.mode) == (w, h, mode)
    assert coded.quant[0] == quality_table(qf, LUMA)
    assert coded.quant[1] == quality_table(qf, CHROMA)
    m = 8 * mode.factor
    assert coded.coefficients[0].shape[:2] == (-(-h // m) * mode.factor, -(-w // m) * mode.factor)
    for kernel in (BILINEAR, DCT_SCALED):
        assert decode(data, kernel).shape == (w, h)


def test_estimated_quality_of_encoded_files(astronaut):
    for q in range(50, 101):
        assert parse(encode(astronaut, q, S444)).estimated_quality() == q


@pytest.mark.parametrize("mode", [S444, S420])
@pytest.mark.parametrize("qf", [1, 30, 85, 100])
def test_flat_gray_is_exact(mode, qf):
    gray = RasterImage.filled(40, 24, 128)
    data = encode(gray, qf, mode)
    assert decode(data) == gray
    assert decode(data, DCT_SCALED) == gray


def test_high_quality_psnr_on_corpus(corpus):
    values = [psnr(img, decode(encode(img, 100, S444))) for _, img in corpus]
    assert np.mean(values) >= 45


def test_psnr_monotone_in_quality(astronaut):
    values = [psnr(astronaut, decode(encode(astronaut, q, S444))) for q in range(80, 101)]
    assert all(b >= a - 0.05 for a, b in zip(values, values[1:]))


def test_transcode_identity(astronaut):
    for mode in (S444, S420):
        data = encode(astronaut, 83, mode)
        again = serialize(parse(data))
        assert again == data
        assert decode(again) == decode(data)


def test_serialize_of_foreign_file_decodes_identically(astronaut):
    data = pillow_encode(astronaut, quality=70, subsampling=2, optimize=True)
    assert decode(serialize(parse(data))) == decode(data)


@pytest.mark.parametrize("kw, mode, qf", [
    (dict(quality=90, subsampling=0), S444, 90),
    (dict(quality=75, subsampling=2), S420, 75),
    (dict(quality=60, subsampling=2, optimize=True), S420, 60),
    (dict(quality=80, subsampling=2, restart_marker_blocks=3), S420, 80),
    (dict(quality=95, subsampling=0, restart_marker_rows=1), S444, 95),
])
def test_pillow_files_decode_like_pillow(astronaut, kw, mode, qf):
    data = pillow_encode(astronaut, **kw)
    coded = parse(data)
    assert coded.mode is mode
    assert coded.estimated_quality() == qf
    assert psnr(decode(data), pillow_decode(data)) > 45


def test_restart_interval_is_reported(astronaut):
    data = pillow_encode(astronaut, quality=80, subsampling=2, restart_marker_blocks=3)
    assert parse(data).restart_interval == 3
    assert parse(encode(astronaut, 80, S420)).restart_interval == 0


def test_our_files_decode_in_pillow(corpus):
    for _, img in corpus[:4]:
        for mode in (S444, S420):
            data = encode(img, 85, mode)
            assert psnr(decode(data), pillow_decode(data)) > 45
            assert psnr(img, pillow_decode(data)) > 28


def _non_interleaved(data: bytes) -> bytes:
    """Rewrite an interleaved file as three single-component scans."""
    coded = parse(data)
    head = data[:data.index(b"\xff\xda")]
    out = [head]
    tables = ((STD_DC_LUMA, STD_AC_LUMA), (STD_DC_CHROMA, STD_AC_CHROMA),
              (STD_DC_CHROMA, STD_AC_CHROMA))
    for c in range(3):
        blocks = coded.coefficients[c].reshape(-1, 64)
        dc, ac = tables[c]
        ecs = encode_blocks(blocks, np.zeros(len(blocks), np.intp), (dc,), (ac,))
        tid = 0 if c == 0 else 0x11
        out.append(b"\xff\xda\x00\x08" + bytes([1, c + 1, tid, 0, 63, 0]) + ecs)
    out.append(b"\xff\xd9")
    return b"".join(out)


@pytest.mark.parametrize("mode", [S444, S420])
def test_non_interleaved_scans(mode):
    img = smooth_image(32, 32, seed=5)
    data = encode(img, 88, mode)
    alt = _non_interleaved(data)
    assert sum(s.name == "SOS" for s in iter_segments(alt)) == 3
    assert decode(alt) == decode(data)
    assert psnr(pillow_decode(alt), decode(alt)) > 45


def test_metadata_segments_are_ignored(astronaut):
    data = encode(astronaut, 80, S420)
    noisy = insert_segment(data, 0xE1, b"Exif\x00\x00" + bytes(5000))
    noisy = insert_segment(noisy, COM, b"hello")
    noisy = insert_segment(noisy, 0xED, bytes(65000))
    assert decode(noisy) == decode(data)


def test_progressive_is_unsupported(astronaut):
    data = pillow_encode(astronaut, quality=80, progressive=True)
    with pytest.raises(UnsupportedFormatError):
        parse(data)


def test_corrupt_entropy_data_reports_mcu(astronaut):
    data = encode(astronaut, 80, S444)
    start = data.index(b"\xff\xda")
    sos_len = int.from_bytes(data[start + 2:start + 4], "big")
    ecs_start = start + 2 + sos_len
    # Nine one-bits are not a valid luma DC code.
    bad = data[:ecs_start] + b"\xff\x00" * 8 + data[ecs_start + 16:]
    with pytest.raises(DecodeError) as info:
        parse(bad)
    assert info.value.mcu == 0
    assert "MCU 0" in str(info.value)


def test_corruption_later_in_stream_names_later_mcu(astronaut):
    data = bytearray(encode(astronaut, 80, S444))
    mid = len(data) // 2
    data[mid:mid + 40] = b"\xff\x00" * 20
    with pytest.raises(DecodeError) as info:
        parse(bytes(data))
    assert info.value.mcu > 0


def test_truncated_stream_is_a_format_error(astronaut):
    data = encode(astronaut, 80, S444)
    with pytest.raises(FormatError):
        parse(data[:len(data) // 2])
    with pytest.raises(FormatError):
        parse(b"not a jpeg")


def test_kernel_name_is_validated(astronaut):
    with pytest.raises(ValueError):
        decode(encode(astronaut, 80, S420), "nearest")


def test_dct_kernel_is_block_local():
    # Changing one chroma block leaves every pixel outside its 16x16 area untouched.
    img = smooth_image(64, 64, seed=1)
    coded = parse(encode(img, 90, S420))
    before = reconstruct(coded, DCT_SCALED).pixels.astype(int)
    cb = coded.coefficients[1].copy()
    cb[1, 2, 0] += 20
    bumped = type(coded)(coded.width, coded.height, coded.mode,
                         (coded.coefficients[0], cb, coded.coefficients[2]), coded.quant)
    after = reconstruct(bumped, DCT_SCALED).pixels.astype(int)
    changed = np.argwhere((before != after).any(-1))
    assert changed[:, 0].min() >= 16 and changed[:, 0].max() < 32
    assert changed[:, 1].min() >= 32 and changed[:, 1].max() < 48
    bilinear = reconstruct(bumped, BILINEAR).pixels.astype(int) - reconstruct(coded, BILINEAR).pixels
    spread = np.argwhere((bilinear != 0).any(-1))
    assert spread[:, 1].min() < 32 or spread[:, 1].max() >= 48


def requantize_oracle(coded, qf_new):
    out = []
    for c in range(3):
        q_old = np.array(coded.quant[c].values)
        q_new = np.array(quality_table(qf_new, LUMA if c == 0 else CHROMA).values)
        flat = coded.coefficients[c].reshape(-1, 64)
        res = np.empty_like(flat)
        for i, row in enumerate(flat):
            for k in range(64):
                x = Fraction(int(row[k]) * int(q_old[k]), int(q_new[k]))
                mag = int(abs(x) + Fraction(1, 2))
                res[i, k] = mag if x >= 0 else -mag
        out.append(res.reshape(coded.coefficients[c].shape))
    return out


def test_requantize_matches_rational_oracle():
    img = smooth_image(48, 32, seed=2)
    coded = parse(encode(img, 97, S420))
    got = requantize_coded(coded, 85)
    for a, b in zip(got.coefficients, requantize_oracle(coded, 85)):
        assert np.array_equal(a, b)
    assert got.mode is S420
    assert got.estimated_quality() == 85


def test_requantize_examples(astronaut):
    coded = parse(encode(astronaut, 88, S420))
    same = requantize_coded(coded, 88)
    for a, b in zip(same.coefficients, coded.coefficients):
        assert np.array_equal(a, b)
    once = requantize(coded, 80)
    assert requantize(parse(once), 80) == once
    gray = parse(encode(RasterImage.filled(32, 32, 128), 90, S444))
    for q in (10, 50, 85):
        assert not any(c.any() for c in requantize_coded(gray, q).coefficients)


def test_requantize_monotone(corpus):
    for _, img in corpus[:5]:
        coded = parse(encode(img, 98, S420))
        values = [psnr(img, decode(requantize(coded, q))) for q in range(70, 99, 4)]
        assert all(b >= a - 0.1 for a, b in zip(values, values[1:]))


@given(arrays(np.uint8, (16, 16, 3)), st.sampled_from([S444, S420]), st.integers(50, 100))
def test_encode_estimate_roundtrip_property(px, mode, qf):
    assert estimate_quality(parse(encode(RasterImage(px), qf, mode)).quant[0]) == qf
