"""End-to-end EtC experiments: encrypt, compress, upload, download, decrypt, score."""

from __future__ import annotations

import contextlib
import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import corpus
from .cipher import EtcKey, decrypt, encrypt, read_key_file
from .image import RasterImage, crop_to_block_multiple, psnr, read_ppm
from .jpeg import DCT_SCALED, S420, S444, SubsamplingMode, decode, encode
from .sns import FACEBOOK_HQ, TWITTER, FacebookPolicy, ProviderModel, get_provider, simulate_upload

ENCRYPTED = "encrypted"
PLAIN = "plain"
ARMS = (ENCRYPTED, PLAIN)
GROUND_TRUTHS = ("original", "jpeg")

# The sender and receiver run an IJG-style codec whose 4:2:0 chroma is
# reconstructed block by block, so decryption never sees bleed it did not
# get from a provider.
RECEIVER_UPSAMPLING = DCT_SCALED

CSV_HEADER = ("provider", "arm", "mode", "qf", "mean_psnr",
              "mean_artifact_score", "n_images", "error")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@contextlib.contextmanager
def pipeline_stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def block_artifact_score(img: RasterImage, period: int = 8) -> float:
    """Excess mean absolute step across block boundaries.

    Differences between horizontally or vertically adjacent samples are
    split into those that straddle a boundary (the second sample's column or
    row is a multiple of ``period``) and the rest; the score is the boundary
    mean minus the off-boundary mean, floored at 0.
    """
    if period < 1 or img.width <= period or img.height <= period:
        raise ValueError(f"{img.width}x{img.height} image too small for period {period}")
    p = img.pixels.astype(np.int32)
    dh = np.abs(np.diff(p, axis=1))
    dv = np.abs(np.diff(p, axis=0))
    on_h = (np.arange(1, img.width) % period) == 0
    on_v = (np.arange(1, img.height) % period) == 0
    on_sum = dh[:, on_h].sum() + dv[on_v].sum()
    on_n = dh[:, on_h].size + dv[on_v].size
    off_sum = dh[:, ~on_h].sum() + dv[~on_v].sum()
    off_n = dh[:, ~on_h].size + dv[~on_v].size
    if off_n == 0:
        return 0.0
    return max(0.0, float(on_sum / on_n - off_sum / off_n))


@dataclass(frozen=True, eq=False)
class PipelineOutcome:
    """Every intermediate of one upload/download round.

    ``original`` is I, ``encrypted`` is I_e (I itself for the plain arm),
    ``uploaded`` and ``downloaded`` are the JPEG bytes I_ec and its
    provider-manipulated version, ``decoded`` is the decompressed download
    and ``decrypted`` the final image compared against ``reference``.
    """

    original: RasterImage
    encrypted: RasterImage
    uploaded: bytes
    downloaded: bytes
    decoded: RasterImage
    decrypted: RasterImage
    reference: RasterImage
    psnr: float
    artifact_score: float


def _prepare(img: RasterImage, block: int) -> RasterImage:
    with pipeline_stage("crop"):
        return crop_to_block_multiple(img, block, block)


def _upload(img: RasterImage, key: Optional[EtcKey], qf: int, mode, block: int):
    with pipeline_stage("encrypt"):
        enc = img if key is None else encrypt(img, key, block, block)
    with pipeline_stage("encode"):
        return enc, encode(enc, qf, mode)


def _receive(uploaded: bytes, key, provider: ProviderModel, policy, block: int):
    with pipeline_stage("simulate"):
        downloaded = simulate_upload(provider, uploaded, policy)
    with pipeline_stage("decode"):
        decoded = decode(downloaded, RECEIVER_UPSAMPLING)
    with pipeline_stage("decrypt"):
        final = decoded if key is None else decrypt(decoded, key, block, block)
    return downloaded, decoded, final


def _reference(img, qf, mode, ground_truth):
    if ground_truth == "original":
        return img
    if ground_truth == "jpeg":
        with pipeline_stage("reference"):
            return decode(encode(img, qf, mode), RECEIVER_UPSAMPLING)
    raise ValueError(f"ground truth must be one of {GROUND_TRUTHS}, got {ground_truth!r}")


def _score(final, reference):
    with pipeline_stage("psnr"):
        return psnr(reference, final), block_artifact_score(final)


def run_pipeline(img: RasterImage, key: Optional[EtcKey], qf: int, mode,
                 provider: ProviderModel, *, ground_truth: str = "original",
                 policy: Optional[FacebookPolicy] = None, block: int = 16) -> PipelineOutcome:
    """One EtC round trip; ``key=None`` runs the non-encrypted arm."""
    if ground_truth not in GROUND_TRUTHS:
        raise ValueError(f"ground truth must be one of {GROUND_TRUTHS}, got {ground_truth!r}")
    mode = SubsamplingMode.parse(mode)
    img = _prepare(img, block)
    enc, uploaded = _upload(img, key, qf, mode, block)
    downloaded, decoded, final = _receive(uploaded, key, provider, policy, block)
    reference = _reference(img, qf, mode, ground_truth)
    value, artifact = _score(final, reference)
    return PipelineOutcome(img, enc, uploaded, downloaded, decoded, final, reference,
                           value, artifact)


@dataclass(frozen=True)
class ExperimentSpec:
    images: tuple
    qfs: tuple = tuple(range(80, 101))
    modes: tuple = (S444, S420)
    providers: tuple = (FACEBOOK_HQ, TWITTER)
    arms: tuple = ARMS
    key: EtcKey = EtcKey.from_master(0)
    ground_truth: str = "original"
    facebook_qf: int = 77
    block: int = 16

    def __post_init__(self):
        if not self.images:
            raise ValueError("experiment needs at least one image")
        if not self.qfs:
            raise ValueError("experiment needs at least one quality factor")
        for q in self.qfs:
            if not 1 <= q <= 100:
                raise ValueError(f"quality factor {q} out of range")
        object.__setattr__(self, "modes", tuple(SubsamplingMode.parse(m) for m in self.modes))
        for arm in self.arms:
            if arm not in ARMS:
                raise ValueError(f"unknown arm {arm!r}")
        if self.ground_truth not in GROUND_TRUTHS:
            raise ValueError(f"unknown ground truth {self.ground_truth!r}")
        FacebookPolicy(self.facebook_qf)


@dataclass(frozen=True)
class CellResult:
    """Per-image outcome of one (provider, arm, mode, qf) cell."""

    image: str
    provider: str
    arm: str
    mode: str
    qf: int
    psnr: float = math.nan
    artifact_score: float = math.nan
    error: str = ""


@dataclass(frozen=True)
class ResultRow:
    provider: str
    arm: str
    mode: str
    qf: int
    mean_psnr: float
    mean_artifact_score: float
    n_images: int
    error: str = ""

    @property
    def key(self):
        return self.provider, self.arm, self.mode, self.qf


def _fmt(x: float) -> str:
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf"
    return f"{x:.4f}"


@dataclass
class ExperimentResult:
    rows: list
    cells: list = field(default_factory=list)

    def row(self, provider: str, arm: str, mode, qf: int) -> ResultRow:
        mode = SubsamplingMode.parse(mode).short
        for r in self.rows:
            if r.key == (provider, arm, mode, qf):
                return r
        raise KeyError((provider, arm, mode, qf))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.provider, r.arm, r.mode, r.qf, _fmt(r.mean_psnr),
                        _fmt(r.mean_artifact_score), r.n_images, r.error])
        return buf.getvalue()


def _aggregate(cells: Sequence[CellResult]) -> list:
    groups: dict = {}
    for c in cells:
        groups.setdefault((c.provider, c.arm, c.mode, c.qf), []).append(c)
    rows = []
    for key in sorted(groups):
        ok = [c for c in groups[key] if not c.error]
        errors = sorted({f"{c.image}: {c.error}" for c in groups[key] if c.error})
        rows.append(ResultRow(
            *key,
            mean_psnr=statistics.fmean(c.psnr for c in ok) if ok else math.nan,
            mean_artifact_score=statistics.fmean(c.artifact_score for c in ok) if ok else math.nan,
            n_images=len(ok),
            error="; ".join(errors)))
    return rows


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run the full (image x arm x mode x qf x provider) grid.

    The uploaded JPEG of each (image, arm, mode, qf) is produced once and
    shared by all providers.  Failures are recorded per cell.
    """
    policy = FacebookPolicy(spec.facebook_qf)
    cells = []
    for path in spec.images:
        name = Path(path).name
        try:
            img = _prepare(read_ppm(path), spec.block)
        except Exception as exc:
            for arm in spec.arms:
                for mode in spec.modes:
                    for qf in spec.qfs:
                        for prov in spec.providers:
                            cells.append(CellResult(name, prov.name, arm, mode.short, qf,
                                                    error=f"load: {exc}"))
            continue
        for arm in spec.arms:
            key = spec.key if arm == ENCRYPTED else None
            for mode in spec.modes:
                for qf in spec.qfs:
                    try:
                        _, uploaded = _upload(img, key, qf, mode, spec.block)
                        reference = _reference(img, qf, mode, spec.ground_truth)
                    except StageError as exc:
                        cells.extend(CellResult(name, p.name, arm, mode.short, qf, error=str(exc))
                                     for p in spec.providers)
                        continue
                    for prov in spec.providers:
                        try:
                            _, _, final = _receive(uploaded, key, prov, policy, spec.block)
                            value, artifact = _score(final, reference)
                        except StageError as exc:
                            cells.append(CellResult(name, prov.name, arm, mode.short, qf,
                                                    error=str(exc)))
                            continue
                        cells.append(CellResult(name, prov.name, arm, mode.short, qf,
                                                value, artifact))
    return ExperimentResult(_aggregate(cells), cells)


def _parse_qfs(value: str) -> tuple:
    out = []
    for part in value.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def _list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


def _expand_images(entries, base: Path) -> tuple:
    paths = []
    for entry in entries:
        if entry == "@corpus":
            paths.extend(corpus.corpus_paths())
            continue
        p = Path(entry)
        if not p.is_absolute():
            p = base / p
        if p.is_dir():
            paths.extend(sorted(p.glob("*.ppm")))
        else:
            paths.append(p)
    return tuple(paths)


def parse_spec(text: str, base_dir=".") -> ExperimentSpec:
    """Read an experiment spec from ``key=value`` lines.

    Keys: ``images`` (comma list of PPM files or directories, or ``@corpus``
    for the bundled desk corpus, which is also the default), ``qf`` (e.g.
    ``80-100`` or ``80,85,90``), ``modes``, ``providers``, ``arms``,
    ``key`` (hex master key) or ``key_file``, ``ground_truth``,
    ``facebook_qf`` and ``block``.  Relative paths resolve against ``base_dir``.
    """
    base = Path(base_dir)
    kwargs = {}
    images = ["@corpus"]
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        try:
            if k == "images":
                images = _list(v)
            elif k in ("qf", "qfs"):
                kwargs["qfs"] = _parse_qfs(v)
            elif k == "modes":
                kwargs["modes"] = tuple(SubsamplingMode.parse(m) for m in _list(v))
            elif k == "providers":
                kwargs["providers"] = tuple(get_provider(p) for p in _list(v))
            elif k == "arms":
                kwargs["arms"] = tuple(_list(v))
            elif k == "key":
                kwargs["key"] = EtcKey.from_master(int(v, 16))
            elif k == "key_file":
                p = Path(v)
                kwargs["key"] = read_key_file(p if p.is_absolute() else base / p)
            elif k == "ground_truth":
                kwargs["ground_truth"] = v
            elif k in ("facebook_qf", "target_qf"):
                kwargs["facebook_qf"] = int(v)
            elif k == "block":
                kwargs["block"] = int(v)
            else:
                raise ValueError(f"unknown key {k!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ExperimentSpec(images=_expand_images(images, base), **kwargs)
