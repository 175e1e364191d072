"""The codec on its own: quality, subsampling, table estimation, DCT-domain requantization.

Run:  python3 demos/02_baseline_jpeg.py
"""
from etcsns.corpus import load_corpus
from etcsns.image import psnr
from etcsns.jpeg import (DCT_SCALED, S420, S444, decode, encode, iter_segments, parse,
                         quality_table, requantize)

name, img = load_corpus()[1]
print(name)

print(" qf  mode   bytes   PSNR")
for qf in (50, 75, 85, 95, 100):
    for mode in (S444, S420):
        data = encode(img, qf, mode)
        print(f"{qf:3d}  {mode.value}  {len(data):6d}  {psnr(img, decode(data)):5.2f}")

data = encode(img, 85, S420)
print([s.name for s in iter_segments(data)])

print(quality_table(85, "luma").natural())
coded = parse(data)
print("estimated quality:", coded.estimated_quality(), "mode:", coded.mode.value)

# Requantize without going back to pixels.
hq = encode(img, 97, S420)
rq = requantize(parse(hq), 85)
fresh = encode(img, 85, S420)
print("requantized 97->85:", len(rq), "bytes,", round(psnr(img, decode(rq)), 2), "dB")
print("fresh encode at 85:", len(fresh), "bytes,", round(psnr(img, decode(fresh)), 2), "dB")

# Two ways to rebuild 4:2:0 chroma.
print("bilinear chroma:", round(psnr(img, decode(fresh)), 2),
      " block-local chroma:", round(psnr(img, decode(fresh, DCT_SCALED)), 2))
