"""Regenerate the bundled 256x144 desk corpus (src/etcsns/corpus/*.ppm).

Seven photographs come from scikit-image's sample data; three images are
synthesized.  Needs scikit-image, which the library itself does not.
"""

from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage import data, transform

from etcsns.image import RasterImage, write_ppm

W, H = 256, 144
OUT = Path(__file__).resolve().parents[1] / "src" / "etcsns" / "corpus"

PHOTOS = ["astronaut", "coffee", "chelsea", "rocket", "hubble_deep_field",
          "immunohistochemistry", "retina"]


def fit(arr):
    h, w = arr.shape[:2]
    if w * H > h * W:
        cw = h * W // H
        arr = arr[:, (w - cw) // 2:(w - cw) // 2 + cw]
    else:
        ch = w * H // W
        arr = arr[(h - ch) // 2:(h - ch) // 2 + ch]
    out = transform.resize(arr[..., :3], (H, W), anti_aliasing=True, preserve_range=True)
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def gradient_shapes(rng):
    y, x = np.mgrid[0:H, 0:W].astype(float)
    img = np.stack([x / W * 200 + 30, y / H * 180 + 40, (1 - x / W) * 160 + 60], axis=-1)
    for _ in range(6):
        cx, cy, r = rng.uniform(0, W), rng.uniform(0, H), rng.uniform(10, 40)
        color = rng.uniform(0, 255, 3)
        inside = np.clip(r - np.hypot(x - cx, y - cy) + 0.5, 0, 1)[..., None]
        img = img * (1 - inside) + color * inside
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def plasma(rng):
    noise = rng.normal(size=(H, W, 3))
    smooth = np.stack([ndimage.gaussian_filter(noise[..., c], 6, mode="wrap") for c in range(3)], -1)
    smooth = (smooth - smooth.mean()) / smooth.std()
    return np.clip(np.round(128 + 45 * smooth), 0, 255).astype(np.uint8)


def textured_stripes(rng):
    y, x = np.mgrid[0:H, 0:W].astype(float)
    base = 128 + 80 * np.sin(x / 9.0 + 0.3 * np.sin(y / 13.0))
    img = np.stack([base, 255 - base, 0.5 * base + 60], axis=-1)
    img += rng.normal(scale=6, size=img.shape)
    img = ndimage.gaussian_filter(img, (0.7, 0.7, 0))
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(PHOTOS):
        write_ppm(OUT / f"{i:02d}_{name}.ppm", RasterImage(fit(getattr(data, name)())))
    rng = np.random.default_rng(20180101)
    for j, fn in enumerate((gradient_shapes, plasma, textured_stripes), len(PHOTOS)):
        write_ppm(OUT / f"{j:02d}_synthetic_{fn.__name__}.ppm", RasterImage(fn(rng)))


if __name__ == "__main__":
    main()
