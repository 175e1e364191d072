import subprocess
import sys

import pytest

from etcsns.cipher import EtcKey, write_key_file
from etcsns.cli import main
from etcsns.image import RasterImage, read_ppm, write_ppm
from etcsns.jpeg import decode, encode, parse

COMMANDS = ["encrypt", "decrypt", "jpeg-encode", "jpeg-decode", "transcode", "simulate",
            "evaluate", "inspect"]


@pytest.fixture
def files(tmp_path, astronaut):
    src = tmp_path / "a.ppm"
    write_ppm(src, astronaut)
    key = tmp_path / "k.txt"
    write_key_file(key, EtcKey.from_master(42))
    return tmp_path, src, key


def test_encrypt_decrypt_round_trip(files):
    d, src, key = files
    assert main(["encrypt", "--key-file", str(key), "--in", str(src), "--out", str(d / "e.ppm")]) == 0
    assert main(["decrypt", "--key-file", str(key), "--in", str(d / "e.ppm"),
                 "--out", str(d / "r.ppm")]) == 0
    assert (d / "r.ppm").read_bytes() == src.read_bytes()
    assert (d / "e.ppm").read_bytes() != src.read_bytes()


def test_key_options_agree(files):
    d, src, _ = files
    k = EtcKey.from_master(0x2A)
    main(["encrypt", "--key", "2a", "--in", str(src), "--out", str(d / "m.ppm")])
    main(["encrypt", "--keys", *(f"{v:x}" for v in (k.k1, k.k2, k.k3, k.k4)),
          "--in", str(src), "--out", str(d / "f.ppm")])
    assert (d / "m.ppm").read_bytes() == (d / "f.ppm").read_bytes()


def test_encrypt_crops_and_reports(tmp_path, capsys):
    src = tmp_path / "odd.ppm"
    write_ppm(src, RasterImage.filled(40, 20, 9))
    assert main(["encrypt", "--key", "1", "--in", str(src), "--out", str(tmp_path / "e.ppm")]) == 0
    assert "cropped 40x20 -> 32x16" in capsys.readouterr().err
    assert read_ppm(tmp_path / "e.ppm").shape == (32, 16)


def test_encode_then_inspect(files, capsys):
    d, src, _ = files
    out = d / "a.jpg"
    assert main(["jpeg-encode", "--quality", "85", "--subsampling", "420",
                 "--in", str(src), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["inspect", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert "estimated_qf: 85" in text.splitlines()
    assert "subsampling: 4:2:0" in text.splitlines()
    assert "width: 256" in text and "quant_table_luma:" in text


def test_decode_and_transcode(files):
    d, src, _ = files
    jpg = d / "a.jpg"
    main(["jpeg-encode", "--quality", "95", "--subsampling", "444", "--in", str(src), "--out", str(jpg)])
    assert main(["jpeg-decode", "--in", str(jpg), "--out", str(d / "b.ppm")]) == 0
    assert read_ppm(d / "b.ppm") == decode(jpg.read_bytes())
    assert main(["jpeg-decode", "--upsampling", "dct", "--in", str(jpg),
                 "--out", str(d / "c.ppm")]) == 0
    assert main(["transcode", "--requantize", "70", "--in", str(jpg), "--out", str(d / "t.jpg")]) == 0
    assert parse((d / "t.jpg").read_bytes()).estimated_quality() == 70


def test_simulate_twitter_low_quality_keeps_pixels(files):
    d, src, _ = files
    jpg = d / "low.jpg"
    main(["jpeg-encode", "--quality", "60", "--subsampling", "420", "--in", str(src), "--out", str(jpg)])
    assert main(["simulate", "--provider", "twitter", "--in", str(jpg), "--out", str(d / "o.jpg")]) == 0
    assert decode((d / "o.jpg").read_bytes()) == decode(jpg.read_bytes())


def test_simulate_with_config(files):
    d, src, _ = files
    jpg = d / "a.jpg"
    jpg.write_bytes(encode(read_ppm(src), 90, "444"))
    cfg = d / "fb.cfg"
    cfg.write_text("provider = facebook\ntarget_qf = 73\n")
    assert main(["simulate", "--config", str(cfg), "--in", str(jpg), "--out", str(d / "o.jpg")]) == 0
    assert parse((d / "o.jpg").read_bytes()).estimated_quality() == 73


def test_evaluate_writes_csv(files):
    d, src, _ = files
    spec = d / "spec.txt"
    spec.write_text("images = a.ppm\nqf = 85\nmodes = 420\nproviders = twitter\n")
    assert main(["evaluate", "--spec", str(spec), "--out", str(d / "r.csv")]) == 0
    lines = (d / "r.csv").read_text().splitlines()
    assert lines[0].startswith("provider,arm,mode,qf,mean_psnr,mean_artifact_score,n_images")
    assert len(lines) == 3


@pytest.mark.parametrize("cmd", COMMANDS)
def test_help_exits_zero(cmd, capsys):
    assert main([cmd, "--help"]) == 0
    assert "--" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["encrypt", "--in", "a", "--out", "b"],
    ["jpeg-encode", "--quality", "101", "--in", "a", "--out", "b"],
    ["jpeg-encode", "--subsampling", "422", "--in", "a", "--out", "b"],
    ["encrypt", "--key", "xyz", "--in", "a", "--out", "b"],
    ["simulate", "--in", "a", "--out", "b"],
    ["inspect", "--in", "a", "--bogus"],
])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "error:" in err


def test_processing_errors_exit_two(files, capsys):
    d, src, key = files
    assert main(["decrypt", "--key-file", str(d / "nope.txt"), "--in", str(src),
                 "--out", str(d / "x.ppm")]) == 2
    assert "error [key]" in capsys.readouterr().err
    bad_key = d / "bad.txt"
    bad_key.write_text("K1=12\n")
    assert main(["decrypt", "--key-file", str(bad_key), "--in", str(src), "--out", str(d / "x")]) == 2
    assert "error [key]" in capsys.readouterr().err
    assert main(["jpeg-decode", "--in", str(src), "--out", str(d / "x.ppm")]) == 2
    assert "error [decode]" in capsys.readouterr().err
    assert main(["inspect", "--in", str(d / "missing.jpg")]) == 2
    assert "error [read]" in capsys.readouterr().err
    odd = d / "odd.ppm"
    write_ppm(odd, RasterImage.filled(20, 20))
    assert main(["decrypt", "--key-file", str(key), "--in", str(odd), "--out", str(d / "x")]) == 2
    assert "error [decrypt]" in capsys.readouterr().err


def test_module_entry_point(files):
    d, src, _ = files
    proc = subprocess.run([sys.executable, "-m", "etcsns", "inspect", "--in", str(src)],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "error [" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "etcsns", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout == ""
