"""Acceptance criteria, one test each; every test records a pass/fail line."""

import math
import statistics
import time

import numpy as np
import pytest

from etcsns.cipher import EtcKey, decrypt, encrypt
from etcsns.cli import main
from etcsns.corpus import corpus_paths
from etcsns.evaluation import ENCRYPTED, PLAIN, ExperimentSpec, run_experiment
from etcsns.image import block_count, psnr
from etcsns.jpeg import (CHROMA, LUMA, S420, S444, decode, encode, estimate_quality, parse,
                         quality_table, requantize_coded, strip_metadata)
from etcsns.jpeg.markers import COM, insert_segment
from etcsns.sns import FACEBOOK_HQ, FACEBOOK_LQ, FLICKR, GOOGLE_PLUS, TWITTER, FacebookPolicy, \
    facebook_pipeline, simulate_upload, twitter_pipeline
from test_jpeg_math import ANNEX_K_CHROMA, ANNEX_K_LUMA, ijg_oracle

QFS = tuple(range(80, 101))
_full = {}


@pytest.fixture(scope="module")
def full_run():
    """The full default grid over the desk corpus, run once and shared."""
    spec = ExperimentSpec(images=tuple(corpus_paths()))
    start = time.perf_counter()
    result = run_experiment(spec)
    _full["seconds"] = time.perf_counter() - start
    return spec, result


def test_criterion_01_cipher_round_trip(corpus, report):
    rng = np.random.default_rng(20180101)
    keys = [EtcKey(*map(int, rng.integers(0, 2**64 - 1, 4, dtype=np.uint64, endpoint=True)))
            for _ in range(50)]
    start = time.perf_counter()
    failures = sum(decrypt(encrypt(img, k), k) != img for k in keys for _, img in corpus)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 10
    assert report(1, "cipher round trip", ok,
                  f"{failures} mismatches over {len(keys) * len(corpus)} runs in {elapsed:.2f} s")


def test_criterion_02_block_count(report):
    got = (block_count(256, 144, 16, 16), block_count(1920, 1080, 16, 16))
    assert report(2, "block count golden values", got == (144, 8040), f"n = {got}")


def test_criterion_03_ijg_scaling(report):
    bad = [(q, kind) for q in (1, 49, 50, 51, 85, 100)
           for kind, base in ((LUMA, ANNEX_K_LUMA), (CHROMA, ANNEX_K_CHROMA))
           if not np.array_equal(quality_table(q, kind).natural(), ijg_oracle(base, q))]
    misses = [q for q in range(50, 101) for kind in (LUMA, CHROMA)
              if estimate_quality(quality_table(q, kind)) != q]
    ok = not bad and not misses
    assert report(3, "IJG scaling", ok,
                  f"golden mismatches {bad or 'none'}, estimator misses {misses or 'none'}")


def test_criterion_04_codec_sanity(corpus, report):
    q100 = statistics.fmean(psnr(img, decode(encode(img, 100, S444))) for _, img in corpus)
    means = [statistics.fmean(psnr(img, decode(encode(img, q, S444))) for _, img in corpus)
             for q in QFS]
    drops = [(q, round(a - b, 3)) for q, a, b in zip(QFS[1:], means, means[1:]) if b < a - 0.05]
    ok = q100 >= 45 and not drops
    assert report(4, "codec sanity", ok,
                  f"mean PSNR at Qf 100 = {q100:.2f} dB; monotonicity violations {drops or 'none'}")


def test_criterion_05_twitter_model(corpus, report):
    problems = []
    for name, img in corpus:
        low = insert_segment(encode(img, 84, S420), 0xE1, b"Exif\x00\x00meta")
        if twitter_pipeline(low) != strip_metadata(low):
            problems.append(f"{name}: Qf 84 changed")
        high = encode(img, 90, S420)
        out = parse(twitter_pipeline(high))
        oracle = requantize_coded(parse(high), 85)
        if out.estimated_quality() != 85 or not all(
                np.array_equal(a, b) for a, b in zip(out.coefficients, oracle.coefficients)):
            problems.append(f"{name}: Qf 90 not requantized")
        out = parse(twitter_pipeline(encode(img, 95, S444)))
        if (out.mode, out.estimated_quality()) != (S420, 85):
            problems.append(f"{name}: 4:4:4 Qf 95 gave {out.mode.value}/{out.estimated_quality()}")
    assert report(5, "Twitter model", not problems,
                  "; ".join(problems) or f"all three rules hold on {len(corpus)} images")


def test_criterion_06_facebook_model(corpus, report):
    problems = []
    for name, img in corpus:
        for mode in (S444, S420):
            for qf in (60, 85, 100):
                data = encode(img, qf, mode)
                for target in (71, 77, 85):
                    out = parse(facebook_pipeline(data, True, FacebookPolicy(target)))
                    if (out.mode, out.estimated_quality()) != (S420, target):
                        problems.append(f"{name} {mode.short}/{qf} -> {target}")
                out = parse(simulate_upload(FACEBOOK_LQ, data))
                if (out.mode, out.estimated_quality()) != (S420, 77):
                    problems.append(f"{name} {mode.short}/{qf} LQ")
    assert report(6, "Facebook model", not problems,
                  "; ".join(problems[:5]) or "every output is 4:2:0 at the configured Qf")


def test_criterion_07_encrypted_420_artifact_ordering(full_run, report):
    spec, result = full_run
    scores = {}
    for c in result.cells:
        if c.arm == ENCRYPTED and c.qf == 85:
            scores.setdefault(c.image, {})[(c.provider, c.mode)] = c.artifact_score
    others = (("facebook_hq", "444"), ("twitter", "420"), ("twitter", "444"))
    failing = []
    for image, s in sorted(scores.items()):
        fb = s[("facebook_hq", "420")]
        beaten = [f"{p}/{m} {s[(p, m)]:.3f}" for p, m in others if not fb > s[(p, m)]]
        if beaten:
            failing.append(f"{image} (fb/420 {fb:.3f} vs {', '.join(beaten)})")
    psnr_bad = [q for q in QFS
                if not result.row("facebook_hq", ENCRYPTED, S420, q).mean_psnr
                < result.row("facebook_hq", ENCRYPTED, S444, q).mean_psnr]
    ok = not failing and not psnr_bad
    detail = (f"artifact ordering holds on {len(scores) - len(failing)}/{len(scores)} images"
              + (f", fails on {'; '.join(failing)}" if failing else "")
              + f"; PSNR fb/420 < fb/444 at {len(QFS) - len(psnr_bad)}/{len(QFS)} Qf")
    assert report(7, "Facebook 4:2:0 artifact ordering", ok, detail)


def test_criterion_08_twitter_transparency(full_run, report):
    _, result = full_run
    gaps = {(m, q): result.row("twitter", ENCRYPTED, m, q).mean_psnr
            - result.row("twitter", PLAIN, m, q).mean_psnr
            for m in ("444", "420") for q in QFS}
    worst = max(gaps, key=lambda k: abs(gaps[k]))
    ok = all(abs(g) <= 0.5 for g in gaps.values())
    assert report(8, "Twitter transparency", ok,
                  f"largest |encrypted - plain| = {abs(gaps[worst]):.3f} dB at {worst[0]}/Qf {worst[1]}")


def test_criterion_09_metadata_only_providers(corpus, report):
    key = EtcKey.from_master(0)
    problems = []
    checked = 0
    for name, img in corpus:
        for source in (img, encrypt(img, key)):
            for mode in (S444, S420):
                for qf in (50, 85, 100):
                    data = insert_segment(encode(source, qf, mode), COM, b"uploaded")
                    ref = decode(data)
                    for provider in (GOOGLE_PLUS, FLICKR):
                        checked += 1
                        if decode(simulate_upload(provider, data)) != ref:
                            problems.append(f"{provider.name} {name} {mode.short}/{qf}")
    assert report(9, "metadata-only providers", not problems,
                  "; ".join(problems[:5]) or f"{checked} uploads decode bit-identically")


def test_criterion_10_determinism(full_run, tmp_path, report):
    _, first = full_run
    spec_file = tmp_path / "spec.txt"
    spec_file.write_text("images = @corpus\nqf = 80-100\nmodes = 444, 420\n"
                         "providers = facebook_hq, twitter\narms = encrypted, plain\nkey = 0\n")
    out = tmp_path / "second.csv"
    start = time.perf_counter()
    code = main(["evaluate", "--spec", str(spec_file), "--out", str(out)])
    second_seconds = time.perf_counter() - start
    same = code == 0 and out.read_text() == first.to_csv()
    rows = len(first.rows)
    ok = same and rows == 168 and all(math.isfinite(r.mean_psnr) for r in first.rows)
    assert report(10, "determinism", ok,
                  f"{rows} rows, CSVs {'identical' if same else 'differ'}; full runs took "
                  f"{_full.get('seconds', float('nan')):.1f} s and {second_seconds:.1f} s")
