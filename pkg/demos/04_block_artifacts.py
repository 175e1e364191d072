"""Why encrypted 4:2:0 uploads break on Facebook but not on Twitter.

Facebook decodes every upload to pixels. Its 4:2:0 chroma upsampling
interpolates across block edges, and in a scrambled image neighbouring
blocks are unrelated, so colour from one block leaks into the next. After
decryption the leak sits along block edges in the wrong place.

Run:  python3 demos/04_block_artifacts.py [output_dir]
"""
import sys
from pathlib import Path

from etcsns.cipher import EtcKey
from etcsns.corpus import load_corpus
from etcsns.evaluation import run_pipeline
from etcsns.image import write_ppm
from etcsns.sns import FACEBOOK_HQ, TWITTER, block_artifact_expected

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)
key = EtcKey.from_master(7)

for name, img in load_corpus()[:3]:
    print(name)
    for provider in (FACEBOOK_HQ, TWITTER):
        for mode in ("444", "420"):
            enc = run_pipeline(img, key, 85, mode, provider)
            plain = run_pipeline(img, None, 85, mode, provider)
            flag = "expected" if block_artifact_expected(provider, mode) else "-"
            print(f"  {provider.name:<12} {mode}  encrypted {enc.psnr:5.2f} dB  "
                  f"plain {plain.psnr:5.2f} dB  artifact score {enc.artifact_score:5.2f}  {flag}")
            write_ppm(out / f"{name}_{provider.name}_{mode}.ppm", enc.decrypted)
