"""Scramble a photo block by block, look at it, and get it back.

Run:  python3 demos/01_block_scrambling.py [output_dir]
"""
import sys
from pathlib import Path

from etcsns.cipher import ALL_STEPS, GEOMETRY_NAMES, EtcKey, KeySchedule, decrypt, encrypt
from etcsns.corpus import load_corpus
from etcsns.image import block_count, psnr, write_ppm

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

name, img = load_corpus()[0]
print(name, img.width, "x", img.height, "->", block_count(img.width, img.height, 16, 16), "blocks")

key = EtcKey.from_master(0x5EC2E7)
print(key.to_text())

# what the key decides for the first few blocks
sched = KeySchedule.expand(key, 144)
for i in range(5):
    print(f"block {i:3d}: takes source block {sched.permutation[i]:3d}, "
          f"{GEOMETRY_NAMES[sched.geometry[i]]:>14}, negpos={sched.negpos[i]}, "
          f"channels={sched.shuffle[i]}")

enc = encrypt(img, key)
write_ppm(out / "scrambled.ppm", enc)
print("PSNR original vs scrambled:", round(psnr(img, enc), 2), "dB")

# one step at a time
for step in sorted(ALL_STEPS):
    partial = encrypt(img, key, steps={step})
    write_ppm(out / f"only_{step}.ppm", partial)
    print(f"{step:>9} alone: {psnr(img, partial):6.2f} dB")

back = decrypt(enc, key)
print("decrypted == original:", back == img)

wrong = decrypt(enc, EtcKey.from_master(0x5EC2E8))
print("wrong key gives", round(psnr(img, wrong), 2), "dB")
