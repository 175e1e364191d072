"""Local models of how five social networks manipulate uploaded JPEGs.

Each provider is a pure function from uploaded bytes to the bytes a
receiver downloads.  Three recompression policies exist:

* ``facebook``: always decode and re-encode at 4:2:0 with a quality factor
  in 71..85;
* ``twitter``: requantize 4:2:0 uploads of quality >= 85 to quality 85 in
  the DCT domain, re-encode high quality 4:4:4 uploads to 4:2:0 / 85, and
  otherwise touch only metadata;
* ``passthrough`` (Tumblr, Google+, Flickr): metadata only.

Uploads over a provider's resolution or size limit are first decoded,
resized with :func:`~etcsns.image.resize_bilinear` and re-encoded.

Server-side decoders interpolate 4:2:0 chroma bilinearly across block
edges (``SERVER_UPSAMPLING``).  On block-scrambled images this bleeds
colour between unrelated blocks, which is where the Facebook 4:2:0 block
artifacts come from.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Protocol

from .image import resize_bilinear
from .jpeg import BILINEAR, S420, SubsamplingMode, decode, encode, parse, requantize, strip_metadata

TWITTER_QF = 85
RESIZE_QF = 85
SERVER_UPSAMPLING = BILINEAR


class Provider(Protocol):
    """Anything that turns uploaded JPEG bytes into downloaded bytes."""

    def simulate(self, jpeg: bytes, config=None) -> bytes:
        ...


@dataclass(frozen=True)
class FacebookPolicy:
    """Facebook's recompression quality, observed to vary between 71 and 85."""

    target_qf: int = 77

    def __post_init__(self):
        if not 71 <= self.target_qf <= 85:
            raise ValueError(f"Facebook target quality must be in 71..85, got {self.target_qf}")


@dataclass(frozen=True)
class ProviderModel:
    name: str
    max_w: Optional[int]
    max_h: Optional[int]
    max_bytes: Optional[int]
    policy: str
    target_qf: int = FacebookPolicy().target_qf

    def __post_init__(self):
        if self.policy not in ("facebook", "twitter", "passthrough"):
            raise ValueError(f"unknown recompression policy {self.policy!r}")
        if self.policy == "facebook":
            FacebookPolicy(self.target_qf)

    @property
    def resizes(self) -> bool:
        return self.max_w is not None

    def over_limits(self, width: int, height: int, size: int) -> bool:
        if self.max_w is not None and (width > self.max_w or height > self.max_h):
            return True
        return self.max_bytes is not None and size > self.max_bytes

    def with_config(self, **overrides) -> "ProviderModel":
        return dataclasses.replace(self, **overrides)

    def simulate(self, jpeg: bytes, config=None) -> bytes:
        return simulate_upload(self, jpeg, config)


TWITTER = ProviderModel("twitter", 4096, 4096, 3 * 1024 * 1024, "twitter")
FACEBOOK_HQ = ProviderModel("facebook_hq", 2048, 2048, None, "facebook")
FACEBOOK_LQ = ProviderModel("facebook_lq", 960, 960, None, "facebook")
TUMBLR = ProviderModel("tumblr", 1280, 1280, None, "passthrough")
GOOGLE_PLUS = ProviderModel("google_plus", None, None, None, "passthrough")
FLICKR = ProviderModel("flickr", None, None, None, "passthrough")

PROVIDERS = {p.name: p for p in (TWITTER, FACEBOOK_HQ, FACEBOOK_LQ, TUMBLR, GOOGLE_PLUS, FLICKR)}

_ALIASES = {"facebook": "facebook_hq", "fb": "facebook_hq", "fbhq": "facebook_hq",
            "facebookhq": "facebook_hq", "fblq": "facebook_lq", "facebooklq": "facebook_lq",
            "googleplus": "google_plus", "google+": "google_plus", "gplus": "google_plus"}


def get_provider(name: str) -> ProviderModel:
    key = name.strip().lower().replace("-", "_")
    key = _ALIASES.get(key.replace("_", ""), key)
    try:
        return PROVIDERS[key]
    except KeyError:
        raise ValueError(f"unknown provider {name!r}; choose from {', '.join(PROVIDERS)}") from None


def _resize_reencode(jpeg: bytes, max_w, max_h, qf: int) -> bytes:
    img = decode(jpeg, SERVER_UPSAMPLING)
    if max_w is not None:
        img = resize_bilinear(img, max_w, max_h)
    return encode(img, qf, S420)


def twitter_pipeline(jpeg: bytes) -> bytes:
    """Twitter's quality-dependent recompression (no resizing)."""
    coded = parse(jpeg)
    qf = coded.estimated_quality()
    if qf >= TWITTER_QF:
        if coded.mode is S420:
            return strip_metadata(requantize(coded, TWITTER_QF))
        return strip_metadata(encode(decode(jpeg, SERVER_UPSAMPLING), TWITTER_QF, S420))
    return strip_metadata(jpeg)


def _facebook(jpeg: bytes, max_w, max_h, qf: int) -> bytes:
    img = decode(jpeg, SERVER_UPSAMPLING)
    if max_w is not None:
        img = resize_bilinear(img, max_w, max_h)
    return strip_metadata(encode(img, qf, S420))


def facebook_pipeline(jpeg: bytes, hq: bool = True, policy: FacebookPolicy = FacebookPolicy()) -> bytes:
    """Decode, fit within the HQ/LQ limit and re-encode at 4:2:0."""
    limit = FACEBOOK_HQ if hq else FACEBOOK_LQ
    return _facebook(jpeg, limit.max_w, limit.max_h, policy.target_qf)


def passthrough_pipeline(jpeg: bytes, max_w=None, max_h=None) -> bytes:
    """Metadata-only handling, resizing first when over ``max_w`` x ``max_h``."""
    if max_w is not None:
        coded = parse(jpeg)
        if coded.width > max_w or coded.height > max_h:
            return strip_metadata(_resize_reencode(jpeg, max_w, max_h, RESIZE_QF))
    return strip_metadata(jpeg)


def simulate_upload(provider: ProviderModel, jpeg: bytes, policy: Optional[FacebookPolicy] = None) -> bytes:
    """Bytes a receiver downloads after ``jpeg`` is uploaded to ``provider``.

    ``policy`` overrides the provider's Facebook quality target.
    """
    if provider.policy == "facebook":
        policy = policy or FacebookPolicy(provider.target_qf)
        return _facebook(jpeg, provider.max_w, provider.max_h, policy.target_qf)
    coded = parse(jpeg)
    if provider.over_limits(coded.width, coded.height, len(jpeg)):
        jpeg = _resize_reencode(jpeg, provider.max_w, provider.max_h, RESIZE_QF)
    if provider.policy == "twitter":
        return twitter_pipeline(jpeg)
    return strip_metadata(jpeg)


def block_artifact_expected(provider: ProviderModel, mode) -> bool:
    """Whether decrypted images show block artifacts after this provider."""
    mode = SubsamplingMode.parse(mode)
    if provider.policy == "facebook":
        return mode is S420
    if provider.policy == "twitter":
        return False
    raise ValueError(f"no block-artifact observation for provider {provider.name!r}")


def load_provider_config(text: str, base: Optional[ProviderModel] = None) -> ProviderModel:
    """Build a provider from ``key=value`` lines.

    Keys: ``provider``, ``max_w``, ``max_h``, ``max_bytes`` (``none`` disables
    a limit) and ``target_qf``.  ``#`` starts a comment.
    """
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "provider":
            base = get_provider(value)
        elif key in ("max_w", "max_h", "max_bytes", "target_qf"):
            if value.lower() == "none":
                if key == "target_qf":
                    raise ValueError(f"line {lineno}: target_qf cannot be none")
                overrides[key] = None
            else:
                try:
                    overrides[key] = int(value)
                except ValueError:
                    raise ValueError(f"line {lineno}: {key} must be an integer") from None
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if base is None:
        raise ValueError("config names no provider")
    model = base.with_config(**overrides)
    if (model.max_w is None) != (model.max_h is None):
        raise ValueError("max_w and max_h must both be set or both be none")
    return model
