"""What each social network model does to an upload.

Run:  python3 demos/03_provider_models.py
"""
from etcsns.corpus import load_corpus
from etcsns.jpeg import decode, encode, parse
from etcsns.jpeg.markers import insert_segment
from etcsns.sns import PROVIDERS, simulate_upload

_, img = load_corpus()[2]

uploads = {
    "4:4:4 q95": encode(img, 95, "444"),
    "4:4:4 q80": encode(img, 80, "444"),
    "4:2:0 q90": encode(img, 90, "420"),
    "4:2:0 q60": encode(img, 60, "420"),
}
# a camera would add this
uploads = {k: insert_segment(v, 0xE1, b"Exif\x00\x00" + bytes(200)) for k, v in uploads.items()}

print(f"{'upload':<11}" + "".join(f"{p:>14}" for p in PROVIDERS))
for label, data in uploads.items():
    cells = []
    for provider in PROVIDERS.values():
        out = simulate_upload(provider, data)
        c = parse(out)
        same = decode(out) == decode(data)
        cells.append(f"{c.mode.short}/{c.estimated_quality()}{' =' if same else ' *'}")
    print(f"{label:<11}" + "".join(f"{c:>14}" for c in cells))
print("(= pixels untouched, * recompressed)")
