"""Command-line interface: ``etcsns <command> [flags]``.

Exit status is 0 on success, 1 for usage errors (message and usage on
stderr) and 2 when processing fails; processing errors name the stage that
failed, e.g. ``error [decode]: ...``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cipher import EtcKey, decrypt, encrypt, read_key_file
from .evaluation import StageError, pipeline_stage, parse_spec, run_experiment
from .image import crop_to_block_multiple, read_ppm, write_ppm
from .jpeg import BILINEAR, DCT_SCALED, SubsamplingMode, decode, encode, parse, requantize
from .sns import get_provider, load_provider_config, simulate_upload


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_help()}\n{self.prog}: error: {message}")


def _quality(text: str) -> int:
    try:
        q = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 1 <= q <= 100:
        raise argparse.ArgumentTypeError(f"quality must be in 1..100, got {q}")
    return q


def _block(text: str) -> int:
    try:
        b = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if b < 1:
        raise argparse.ArgumentTypeError("block size must be positive")
    return b


def _hex64(text: str) -> int:
    try:
        v = int(text, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a hex value: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text!r} does not fit in 64 bits")
    return v


def _read_bytes(path) -> bytes:
    with pipeline_stage("read"):
        return Path(path).read_bytes()


def _write_bytes(path, data: bytes) -> None:
    with pipeline_stage("write"):
        Path(path).write_bytes(data)


def _load_key(args) -> EtcKey:
    with pipeline_stage("key"):
        if args.key_file is not None:
            return read_key_file(args.key_file)
        if args.keys is not None:
            return EtcKey(*args.keys)
        return EtcKey.from_master(args.key)


def _cmd_cipher(args, forward: bool) -> None:
    key = _load_key(args)
    with pipeline_stage("read"):
        img = read_ppm(args.input)
    if forward and (img.width % args.block or img.height % args.block):
        with pipeline_stage("crop"):
            cropped = crop_to_block_multiple(img, args.block, args.block)
        print(f"cropped {img.width}x{img.height} -> {cropped.width}x{cropped.height} "
              f"(top-left anchored, block {args.block})", file=sys.stderr)
        img = cropped
    op = encrypt if forward else decrypt
    with pipeline_stage("encrypt" if forward else "decrypt"):
        out = op(img, key, args.block, args.block)
    with pipeline_stage("write"):
        write_ppm(args.output, out)


def _cmd_jpeg_encode(args) -> None:
    with pipeline_stage("read"):
        img = read_ppm(args.input)
    with pipeline_stage("encode"):
        data = encode(img, args.quality, args.subsampling)
    _write_bytes(args.output, data)


def _cmd_jpeg_decode(args) -> None:
    data = _read_bytes(args.input)
    with pipeline_stage("decode"):
        img = decode(data, args.upsampling)
    with pipeline_stage("write"):
        write_ppm(args.output, img)


def _cmd_transcode(args) -> None:
    data = _read_bytes(args.input)
    with pipeline_stage("parse"):
        coded = parse(data)
    with pipeline_stage("requantize"):
        out = requantize(coded, args.requantize)
    _write_bytes(args.output, out)


def _cmd_simulate(args) -> None:
    with pipeline_stage("config"):
        provider = get_provider(args.provider) if args.provider else None
        if args.config is not None:
            provider = load_provider_config(Path(args.config).read_text(), provider)
    data = _read_bytes(args.input)
    with pipeline_stage("simulate"):
        out = simulate_upload(provider, data)
    _write_bytes(args.output, out)


def _cmd_evaluate(args) -> None:
    with pipeline_stage("spec"):
        spec_path = Path(args.spec)
        spec = parse_spec(spec_path.read_text(), spec_path.parent)
    with pipeline_stage("evaluate"):
        result = run_experiment(spec)
    csv_text = result.to_csv()
    if args.output == "-":
        sys.stdout.write(csv_text)
    else:
        with pipeline_stage("write"):
            Path(args.output).write_text(csv_text)
    failed = [r for r in result.rows if r.error]
    if failed:
        print(f"{len(failed)} of {len(result.rows)} rows had failures; see the error column",
              file=sys.stderr)


def _cmd_inspect(args) -> None:
    data = _read_bytes(args.input)
    with pipeline_stage("parse"):
        coded = parse(data)
    names = ("luma", "chroma_cb", "chroma_cr")
    lines = [
        f"width: {coded.width}",
        f"height: {coded.height}",
        f"subsampling: {coded.mode.value}",
        f"estimated_qf: {coded.estimated_quality()}",
        f"restart_interval: {coded.restart_interval}",
    ]
    for name, table in zip(names, coded.quant):
        lines.append(f"quant_table_{name}:")
        nat = table.natural()
        lines.extend("  " + " ".join(f"{int(v):3d}" for v in row) for row in nat)
    print("\n".join(lines))


def _add_io(p, in_help: str, out_help: str | None) -> None:
    p.add_argument("--in", dest="input", required=True, metavar="PATH", help=in_help)
    if out_help is not None:
        p.add_argument("--out", dest="output", required=True, metavar="PATH", help=out_help)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="etcsns", description="Block scrambling EtC for JPEG on social networks.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    for name, verb in (("encrypt", "Scramble"), ("decrypt", "Unscramble")):
        p = sub.add_parser(name, help=f"{verb} a PPM image block by block.",
                           description=f"{verb} a PPM image with the four-step block cipher.")
        keys = p.add_mutually_exclusive_group(required=True)
        keys.add_argument("--key-file", metavar="PATH", help="key file with lines K1=<hex> .. K4=<hex>")
        keys.add_argument("--key", type=_hex64, metavar="HEX",
                          help="64-bit master key, expanded into four subkeys")
        keys.add_argument("--keys", type=_hex64, nargs=4, metavar="HEX",
                          help="the four subkeys K1 K2 K3 K4 directly")
        p.add_argument("--block", type=_block, default=16, metavar="N",
                       help="square block size in pixels (default 16)")
        _add_io(p, "input PPM", "output PPM")
        p.set_defaults(func=lambda a, fwd=(name == "encrypt"): _cmd_cipher(a, fwd))

    p = sub.add_parser("jpeg-encode", help="Encode a PPM as baseline JPEG.")
    p.add_argument("--quality", type=_quality, default=85, metavar="1-100",
                   help="IJG quality factor (default 85)")
    p.add_argument("--subsampling", type=SubsamplingMode.parse, default=SubsamplingMode.S420,
                   metavar="444|420", help="chroma subsampling (default 420)")
    _add_io(p, "input PPM", "output JPEG")
    p.set_defaults(func=_cmd_jpeg_encode)

    p = sub.add_parser("jpeg-decode", help="Decode a baseline JPEG to PPM.")
    p.add_argument("--upsampling", choices=(BILINEAR, DCT_SCALED), default=BILINEAR,
                   help="4:2:0 chroma reconstruction: bilinear across blocks, or "
                        "block-local scaled DCT (default bilinear)")
    _add_io(p, "input JPEG", "output PPM")
    p.set_defaults(func=_cmd_jpeg_decode)

    p = sub.add_parser("transcode", help="Requantize a JPEG in the DCT domain.")
    p.add_argument("--requantize", type=_quality, required=True, metavar="QF",
                   help="target quality factor")
    _add_io(p, "input JPEG", "output JPEG")
    p.set_defaults(func=_cmd_transcode)

    p = sub.add_parser("simulate", help="Run a JPEG through a provider model.")
    p.add_argument("--provider", metavar="NAME",
                   help="twitter, facebook_hq, facebook_lq, tumblr, google_plus or flickr")
    p.add_argument("--config", metavar="PATH",
                   help="key=value provider config (provider, max_w, max_h, max_bytes, target_qf)")
    _add_io(p, "uploaded JPEG", "downloaded JPEG")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="Run an experiment grid and write CSV.")
    p.add_argument("--spec", required=True, metavar="PATH", help="key=value experiment spec")
    p.add_argument("--out", dest="output", required=True, metavar="PATH",
                   help="CSV output path, or - for stdout")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("inspect", help="Print dimensions, subsampling, tables and quality of a JPEG.")
    _add_io(p, "JPEG file", None)
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate" and not (args.provider or args.config):
            parser.error("simulate needs --provider or --config")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
